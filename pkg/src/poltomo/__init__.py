"""Polarization quantum tomography toolkit.

Characteristic functions and quasi-probability distributions over the Stokes
variables, realistic photodetection simulation, and Fourier/Radon
reconstruction, with a negativity-volume nonclassicality measure.
"""

__version__ = "0.1.0"

from .charfn import (
    CharPoint,
    HighlightedState,
    Inefficiency,
    chi_fock_lp,
    chi_highlighted_asymptotic,
    chi_highlighted_exact,
    chi_lp,
    chi_sqz0_exact,
    chi_sqz1_exact,
    chi_two_mode_coherent,
    smooth_char,
)
from .measure import (
    Tomogram,
    WaveplateSetting,
    count_pmf,
    load_tomograms,
    sample,
    save_tomograms,
    smear_pmf,
)
from .pqpd import (
    NegativityCheck,
    QpdGrid,
    Sqz1Family,
    StokesPoint,
    WmRegularized,
    marginal_w1_lp,
    marginal_w23_lp,
    marginal_w23_profile,
    negativity_condition,
    negativity_volume,
    smoothed_pqpd_lp,
    w23_from_wigner_convolution,
    w23_highlighted_sqz0,
    w23_highlighted_sqz1,
    w_m,
    wigner,
)
from .reconstruct import (
    CharGrid,
    assemble_2d,
    assemble_3d,
    empirical_char,
    hermitize,
    invert_2d,
    invert_3d,
)
from .states import (
    Coherent,
    DetectorModel,
    Fock,
    LinearPolarizedState,
    SqueezedFock1,
    SqueezedVacuum,
    Vacuum,
    apply_loss,
    chi_s,
    lp_photon_probs,
)
