"""Why time-bin encoding: polarization QBER under deployed-fiber PMD.

Polarization qubits decohere when a fiber's differential group delay (DGD)
approaches the photon's coherence time.  A broad-linewidth room-temperature
emitter has a coherence time of a few tenths of a picosecond, so even a
modest DGD fully depolarizes the state and drives the QBER toward 50%,
while time-bin/phase encoding is immune to birefringence.

The model is a deterministic DGD with exponential mutual-coherence decay;
it shows the qualitative basis-dependent degradation, not a quantitative
prediction (the penalty depends on how the launched states align with the
fiber's principal states, which varies from link to link).
"""

from spsqkd import coherence_length, pmd_polarization_qber

C_UM_PER_PS = 299.792458  # speed of light in um/ps

# Emission line of the source: O-band center, broad room-temperature width.
WAVELENGTH_NM = 1305.4
FWHM_NM = 8.96

length_um = coherence_length(WAVELENGTH_NM, FWHM_NM)
coherence_ps = length_um / C_UM_PER_PS
print(f"coherence length  : {length_um:.1f} um (Lorentzian estimate)")
print(f"coherence time    : {coherence_ps:.3f} ps")

INTRINSIC_ERROR = 0.0089  # preparation/measurement baseline

print(f"\n{'DGD (ps)':>9} {'QBER':>8}")
for dgd_ps in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 1.50, 3.0):
    e = pmd_polarization_qber(dgd_ps, coherence_ps, INTRINSIC_ERROR)
    note = "   <- deployed metropolitan link" if dgd_ps == 1.50 else ""
    print(f"{dgd_ps:9.2f} {e:8.4f}{note}")

print(
    "\nAt the deployed link's ~1.5 ps DGD the polarization QBER saturates "
    "near 50%,\nconsistent with the large, basis-dependent error rates seen "
    "when polarization\nencoding was attempted there.  Time-bin/phase "
    "encoding avoids the penalty\nentirely, at the cost of the readout "
    "interferometer's extra loss."
)
