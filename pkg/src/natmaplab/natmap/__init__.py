"""Maps into ``L^2``, natural maps, entropy, and exhaustions over pluggable geometries."""
from .backends import (ConformalBallBackend, CuspGridBackend, ExactBackend, MetricBackend,
                       closed_form_ball_volume, sphere_area)
from .exhaustion import (ScalarField, Slice, coarea_check, find_small_slices,
                         lipschitz_violations, proper_lipschitz_function)
from .homotopy import (HomotopyReport, StokesReport, homotopy_stretch_bounds,
                       stokes_error_experiment, stokes_lipschitz_bound)
from .maps import (NaturalMapConfig, PulledBackTensor, derivative_Fc, dphi0, dphi_fd,
                   entropy_estimate, entropy_oracle, g_phi0, jacobian_Fc, jacobian_from_tensor,
                   natural_map_Fc, phi0, phi_c, psi_c, pulled_back_tensor, rayleigh_quotients,
                   sample_cloud)

__all__ = [name for name in dir() if not name.startswith("_")]
