"""Supervised optimization of Nystrom and random Fourier feature maps
by maximizing Discriminant Information."""

__version__ = "0.1.0"

from .data import Dataset, batch_iter, load_csv, load_libsvm, make_blobs, minmax_scale, one_hot
from .exceptions import (ConfigError, ContractError, DataFormatError, DegenerateMapError, DIKernelError,
                         GradientUndefinedError, NumericalError, PSDError, RankDeficiencyError)
from .feature_maps import FourierMap, NystromMap, features, init_fourier, init_nystrom, nystrom_features, \
    rf_features
from .kernels import KernelConfig, kernel_grad_wrt_x2, kernel_matrix
from .objectives import (DIConfig, Targets, di, grad_nys_di, grad_rf_di, kdca_oracle, mrlse, nys_di,
                         rf_di)
from .predictors import KRRModel, accuracy, classify, krr_fit, krr_predict, mse
from .training import TrainConfig, TrainReport, adam_step, effective_batch_size, train_fourier, train_nystrom
