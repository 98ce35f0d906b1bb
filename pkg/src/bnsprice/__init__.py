"""Call pricing for the non-martingale IG-OU Barndorff-Nielsen--Shephard model.

Monte Carlo under the minimal martingale measure produces teaching data for a
feed-forward surrogate that takes a Black-Scholes price as an extra input.
"""
__version__ = "0.1.0"

from .blackscholes import bs_call, norm_cdf
from .dataset import (ANCHOR, CalibrationAnchor, Dataset, SampleRecord, Scaler, generate_dataset, load_dataset,
                      save_dataset, transform_sample)
from .model import (AdmissibilityError, AdmissibilityReport, BnsParams, OptionSpec, c_rho, check_assumption,
                    kappa_bar, levy_density, mmm_theta, mmm_u, mu_from_alpha, small_jump_mean, tail_mass)
from .network import MlpModel, TrainConfig, TrainReport, evaluate_rmse, load_model, predict, save_model, train
from .pricer import PriceEstimate, price_call_mc, price_strikes
from .simulation import SimConfig, make_rng
from .sobol import SobolStream, load_direction_table, sobol_points
