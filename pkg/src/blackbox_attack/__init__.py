"""Black-box adversarial attacks through a locally trained substitute.

Typical flow: wrap a target model in an :class:`OracleHandle`, grow a
substitute with :func:`train_substitute`, craft examples on it with
:func:`fgsm_batch` or :func:`jsma_batch`, and measure how many fool the
oracle with :func:`transferability`.
"""

from .analysis import agreement, chi_square, confusion, frequencies, sign_sequence, success_rate, transferability
from .craft import AdversarialBatch, AdversarialRecord, FgsmConfig, JsmaConfig, fgsm, fgsm_batch, jsma, jsma_batch
from .data import LabeledDataset, load_csv, load_idx, load_mnist, synth_blobs, take_seed_set
from .defense import AdvTrainConfig, DistillConfig, adversarial_train, distill_train, evaluate_defense
from .models import ArchitectureSpec, Network, TrainingConfig, get_architecture, load_model, save_model, train_sgd
from .ndcore import SeededRng
from .oracle import BudgetExhausted, OracleHandle, serve
from .substitute import SubstituteConfig, train_substitute

__version__ = "0.1.0"
