"""Network attack detection by Naive Bayes fusion of ANN and linear SVM decisions."""

__version__ = "0.1.0"

from .evalkit import ConfusionMatrix, Metrics, pcc, rates, tally  # noqa: E402
from .fusion import FusionFeatureSet, NbFusionModel, nb_decide, nb_fit, nb_posterior  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .mlp import MlpConfig, MlpModel, mlp_decide, mlp_score, mlp_train  # noqa: E402
from .nslkdd import ClassLabel, ConnectionRecord, Dataset, class_counts, parse_records, read_dataset  # noqa: E402
from .preprocess import SplitSpec, balance, split, thin_attack_categories  # noqa: E402
from .svm import SvmConfig, SvmModel, svm_decide, svm_margin, svm_train  # noqa: E402
