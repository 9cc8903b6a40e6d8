"""Version shims."""
import numpy as np

# numpy 2 renamed trapz; support both without a warning.
trapezoid = getattr(np, "trapezoid", None) or np.trapz
