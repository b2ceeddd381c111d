"""End-to-end acceptance checks, one test per criterion.

MNIST-backed checks share session fixtures: one architecture-A oracle on
20,000 training images and the 150-image seed set drawn from the test set.
Each test records a PASS/FAIL line, printed together at the end of the run.
Full run: about 40 minutes on one core.
"""

import json
import math
import time
import urllib.error
import urllib.request

import numpy as np
import pytest
from scipy import integrate

from blackbox_attack.analysis import FrequencyTriple, chi_square, chi_square_sf, frequencies, random_sign_sequence, sign_sequence
from blackbox_attack.cli import main as cli_main
from blackbox_attack.craft import fgsm_perturb, jsma_sweep, random_targets
from blackbox_attack.data import load_mnist, take_seed_set
from blackbox_attack.defense import AdvTrainConfig, DistillConfig, adversarial_train, distill_train, evaluate_defense
from blackbox_attack.models import LogisticRegression, Network, TrainingConfig, get_architecture, predict_label, train_sgd
from blackbox_attack.models.architectures import ArchitectureSpec
from blackbox_attack.models.layers import ConvMax, Dense, ReLU, Sigmoid, Softmax
from blackbox_attack.ndcore import SeededRng
from blackbox_attack.oracle import OracleHandle, serve
from blackbox_attack.substitute import SubstituteConfig, predicted_query_count, train_substitute

from conftest import central_difference, requires_mnist

pytestmark = pytest.mark.slow

EPS_GRID = (0.1, 0.2, 0.3, 0.4)


# -- shared MNIST setup ---------------------------------------------------------------


@pytest.fixture(scope="session")
def mnist():
    return load_mnist("train"), load_mnist("test")


@pytest.fixture(scope="session")
def oracle_a(mnist):
    train, _ = mnist
    return train_sgd("A", train.head(20000), TrainingConfig(epochs=6, rng=SeededRng(1)))


@pytest.fixture(scope="session")
def seed_split(mnist):
    """150 unlabeled test images for the attacker; the other 9,850 for evaluation."""
    return take_seed_set(mnist[1], SeededRng(2), n_total=150)


def substitute_a(oracle, seeds, holdout, tau=None):
    handle = OracleHandle.local(oracle)
    run = train_substitute(handle, seeds, SubstituteConfig(arch="A", tau=tau, rng=SeededRng(3)), holdout=holdout)
    return run, handle


@pytest.fixture(scope="session")
def vanilla_run(oracle_a, seed_split):
    seeds, ev = seed_split
    return substitute_a(oracle_a, seeds, ev.inputs)


@pytest.fixture(scope="session")
def pss_run(oracle_a, seed_split):
    seeds, ev = seed_split
    return substitute_a(oracle_a, seeds, ev.inputs, tau=3)


def fgsm_transfer(F, oracle, X, y, eps):
    """Oracle misclassification of FGSM examples crafted on ``F`` against
    the labels ``F`` itself predicts (the attacker has no others)."""
    X_adv = fgsm_perturb(F, X, F.predict(X), eps)
    return float(np.mean(oracle.predict(X_adv) != y))


# -- 1. gradient correctness ---------------------------------------------------------


def _random_models():
    """Small networks covering every layer kind, at two temperatures."""
    specs = [
        ArchitectureSpec("relu", 5, 3, (Dense(6), ReLU(), Softmax(3))),
        ArchitectureSpec("sigmoid", 5, 3, (Dense(6), Sigmoid(), Dense(4), Sigmoid(), Softmax(3))),
        ArchitectureSpec("conv", 36, 4, (ConvMax(3), Dense(5), ReLU(), Softmax(4)), image_shape=(6, 6, 1)),
        ArchitectureSpec("conv2", 147, 3, (ConvMax(2), ConvMax(3), Softmax(3)), image_shape=(7, 7, 3)),
    ]
    out = [LogisticRegression.create(5, 3, SeededRng(0))]
    for i, s in enumerate(specs):
        for T in (1.0, 3.0):
            out.append(Network.init(s, SeededRng(10 + i), temperature=T))
    return out


def test_c01_gradient_correctness(criterion):
    t0 = time.time()
    models = _random_models()
    rng = SeededRng(100)
    worst, cases = 0.0, 0
    for trial in range(108):
        F = models[trial % len(models)]
        r = rng.child(trial)
        x = r.uniform(0.05, 0.95, size=F.in_dim)
        y = int(r.integers(0, F.classes))

        def cost(v):
            return -math.log(F.predict_proba(v[None])[0, y])

        g = F.input_cost_gradient(x[None], [y])[0]
        g_fd = central_difference(cost, x)
        J = F.jacobian(x)
        J_fd = np.stack([central_difference(lambda v, j=j: F.predict_proba(v[None])[0, j], x) for j in range(F.classes)])
        for a, b in ((g, g_fd), (J, J_fd)):
            # elementwise |a - b| <= 1e-4 |b| + 1e-8, reported as a ratio to the bound
            worst = max(worst, float(np.max(np.abs(a - b) / (1e-4 * np.abs(b) + 1e-8))))
        cases += 1
    ok = worst <= 1.0 and time.time() - t0 < 60
    criterion(1, ok, f"{cases} (model, x, y) cases over dense/relu/sigmoid/conv-pool/softmax at T=1,3; "
                     f"worst error {worst:.3f} of the rtol=1e-4 bound; {time.time() - t0:.1f}s")
    assert ok


# -- 2. augmentation arithmetic ------------------------------------------------------


@requires_mnist
def test_c02_augmentation_arithmetic(criterion, oracle_a, mnist):
    # the formula, then real runs on MNIST (logistic-regression substitute keeps them fast)
    formula = predicted_query_count(100, 6) == 6400 and predicted_query_count(100, 10, 3, 400, True) == 3600
    seeds, _ = take_seed_set(mnist[1], SeededRng(4), n_total=100)
    inner = TrainingConfig(epochs=1)
    h = OracleHandle.local(oracle_a)
    run = train_substitute(h, seeds, SubstituteConfig(arch="LR", max_rho=6, inner_train=inner))
    vanilla = (h.ledger.total_queries, run.history[-1].set_size)
    h = OracleHandle.local(oracle_a)
    train_substitute(h, seeds, SubstituteConfig(arch="LR", max_rho=10, sigma=3, kappa=400, inner_train=inner))
    reservoir = h.ledger.total_queries
    ok = formula and vanilla == (6400, 6400) and reservoir == 3600
    criterion(2, ok, f"vanilla rho=6: {vanilla[0]} queries / |S|={vanilla[1]}; reservoir rho=10: {reservoir} queries")
    assert ok


# -- 3. substitute convergence -------------------------------------------------------


@requires_mnist
def test_c03_substitute_convergence(criterion, vanilla_run, oracle_a, mnist):
    run, handle = vanilla_run
    acc = np.mean(oracle_a.predict(mnist[1].inputs) == mnist[1].labels)
    final = run.history[-1].agreement
    curve = " ".join(f"{r.agreement:.3f}" for r in run.history)
    ok = final >= 0.70 and handle.ledger.total_queries == 9600
    criterion(3, ok, f"oracle A test acc {acc:.4f}; agreement by rho {curve}; "
                     f"final {final:.2%} on 9,850 held-out (>= 70%)")
    assert ok


# -- 4. FGSM transferability ---------------------------------------------------------


@requires_mnist
def test_c04_fgsm_transferability(criterion, pss_run, vanilla_run, oracle_a, seed_split):
    _, ev = seed_split
    F = pss_run[0].model
    rates = [fgsm_transfer(F, oracle_a, ev.inputs, ev.labels, e) for e in EPS_GRID]
    vanilla = [fgsm_transfer(vanilla_run[0].model, oracle_a, ev.inputs, ev.labels, e) for e in (0.3, 0.4)]
    monotone = all(a <= b for a, b in zip(rates, rates[1:]))
    ok = max(rates[2:]) >= 0.60 and monotone
    criterion(4, ok, "periodic-step substitute, 9,850 samples: "
                     + " ".join(f"eps={e}:{r:.2%}" for e, r in zip(EPS_GRID, rates))
                     + f" (>= 60% at 0.3-0.4, non-decreasing); fixed-step substitute for reference: "
                     f"eps=0.3:{vanilla[0]:.2%} eps=0.4:{vanilla[1]:.2%}")
    assert ok


# -- 5. LR oracle ------------------------------------------------------------------------


@requires_mnist
def test_c05_lr_oracle_attack(criterion, mnist):
    t0 = time.time()
    train, test = mnist
    oracle = train_sgd("logistic_regression", train.head(20000), TrainingConfig(epochs=10, rng=SeededRng(1)))
    seeds, ev = take_seed_set(test, SeededRng(2), n_per_class=10)
    h = OracleHandle.local(oracle)
    cfg = SubstituteConfig(arch="LR", max_rho=3, tau=2, rng=SeededRng(3),
                           inner_train=TrainingConfig(epochs=30, learning_rate=0.3))
    F = train_substitute(h, seeds, cfg).model
    rate = fgsm_transfer(F, oracle, ev.inputs, ev.labels, 0.3)
    ok = rate >= 0.80 and time.time() - t0 < 600
    criterion(5, ok, f"{h.ledger.total_queries} queries, FGSM eps=0.3 misclassification {rate:.2%} "
                     f"on {len(ev)} samples (>= 80%), {time.time() - t0:.0f}s")
    assert ok


# -- 6. refinement ordering ------------------------------------------------------------


def refinement_runs(oracle, test, seed):
    """Vanilla, periodic-step and periodic-step plus reservoir substitutes
    (reduced-width A, rho=9) from 100 seeds; returns final agreements and queries."""
    seeds, ev = take_seed_set(test, SeededRng(seed), n_total=100)
    holdout = ev.inputs[:2000]
    out = {}
    for name, kw in (("vanilla", {}), ("pss", dict(tau=3)), ("pss_rs", dict(tau=3, sigma=3, kappa=400))):
        h = OracleHandle.local(oracle)
        cfg = SubstituteConfig(arch="A@0.25", max_rho=9, rng=SeededRng(seed + 1), **kw)
        run = train_substitute(h, seeds, cfg, holdout=holdout)
        out[name] = (run.history[-1].agreement, h.ledger.total_queries)
    return out


@requires_mnist
def test_c06_refinement_ordering(criterion, oracle_a, mnist):
    lines, ok = [], True
    for seed in (5, 7, 11):
        r = refinement_runs(oracle_a, mnist[1], seed)
        (v, qv), (p, _), (rs, qrs) = r["vanilla"], r["pss"], r["pss_rs"]
        good = p >= v and abs(p - rs) <= 0.08 and qrs < 0.4 * qv
        ok &= good
        lines.append(f"seed {seed}: vanilla {v:.3f} pss {p:.3f} pss+rs {rs:.3f} ({qrs}/{qv} queries)"
                     + ("" if good else " FAIL"))
    criterion(6, ok, "; ".join(lines))
    assert ok


# -- 7. JSMA distortion ------------------------------------------------------------------


@requires_mnist
def test_c07_jsma_distortion_trend(criterion, pss_run, vanilla_run, oracle_a, seed_split):
    _, ev = seed_split
    X, y = ev.inputs[:200], ev.labels[:200]
    targets = random_targets(y, 10, SeededRng(6))
    ups = (0.07, 0.14, 0.29)
    per_sub = []
    for run, _ in (vanilla_run, pss_run):
        batches = jsma_sweep(run.model, X, targets, ups, epsilon=1.0, source_labels=y)
        per_sub.append([float(np.mean(oracle_a.predict(b.x_star) != y)) for b in batches])
    avg = np.mean(per_sub, axis=0)
    ok = bool(np.all(np.diff(avg) > 0))
    criterion(7, ok, "mean transferability over the two A substitutes, 200 samples, eps=1: "
                     + " ".join(f"ups={u}:{a:.2%}" for u, a in zip(ups, avg))
                     + " (strictly increasing)")
    assert ok


# -- 8 and 9. defenses -------------------------------------------------------------------


DEFENDED_TRAIN = 10000


def attack_defended(oracle, seed_split, eps):
    """Periodic-step A substitute against ``oracle``, evaluated on 2,000 samples."""
    seeds, ev = seed_split
    F = train_substitute(OracleHandle.local(oracle), seeds,
                         SubstituteConfig(arch="A", tau=3, rng=SeededRng(3))).model
    return evaluate_defense(oracle, F, ev.inputs[:2000], ev.labels[:2000], eps)


@requires_mnist
def test_c08_adversarial_training(criterion, mnist, seed_split):
    train = mnist[0].head(DEFENDED_TRAIN)
    reps = {}
    for e in (0.3, 0.15):
        O = adversarial_train("A", train, AdvTrainConfig(e, TrainingConfig(epochs=6, rng=SeededRng(1))))
        for r in attack_defended(O, seed_split, [0.3, 0.4]):
            reps[e, r.eps] = r
    so = {k: r.s_to_o for k, r in reps.items()}
    ok = so[0.3, 0.3] < 0.10 and so[0.15, 0.3] > 0.25 and so[0.15, 0.4] > 0.50
    criterion(8, ok, "(train eps, attack eps): S->O / O->O "
                     + " ".join(f"({a},{b}):{r.s_to_o:.2%}/{r.o_to_o:.2%}" for (a, b), r in sorted(reps.items()))
                     + " (needs (0.3,0.3)<10%, (0.15,0.3)>25%, (0.15,0.4)>50%)")
    assert ok


@requires_mnist
def test_c09_distillation(criterion, mnist, seed_split):
    train = mnist[0].head(DEFENDED_TRAIN)
    plain = train_sgd("A", train, TrainingConfig(epochs=12, rng=SeededRng(1)))
    # training at T scales parameter gradients by 1/T; a larger step and
    # 12 epochs let the logits grow until most input gradients vanish
    cfg = TrainingConfig(epochs=12, learning_rate=0.3, rng=SeededRng(1))
    distilled = distill_train("A", train, DistillConfig(100.0, cfg))
    undefended = attack_defended(plain, seed_split, [0.3, 0.4])
    defended = attack_defended(distilled, seed_split, [0.3, 0.4])
    d, u = defended[0], undefended[0]
    ok = d.o_to_o < 0.15 and d.s_to_o > 0.50 and abs(d.s_to_o - u.s_to_o) <= 0.15
    criterion(9, ok, f"T=100, eps=0.3: O->O {d.o_to_o:.2%} (< 15%), S->O {d.s_to_o:.2%} (> 50%), "
                     f"undefended S->O {u.s_to_o:.2%} (within 15 points); "
                     f"eps=0.4 for reference: O->O {defended[1].o_to_o:.2%}, S->O {defended[1].s_to_o:.2%}, "
                     f"undefended S->O {undefended[1].s_to_o:.2%}")
    assert ok


# -- 10. sign-correlation statistics ------------------------------------------------------


def _tail_by_quadrature(stat, dof):
    k = dof / 2.0
    logc = -k * math.log(2.0) - math.lgamma(k)

    def pdf(x):
        return math.exp(logc + (k - 1) * math.log(x) - x / 2) if x > 0 else 0.0

    return integrate.quad(pdf, stat, stat + 40 * math.sqrt(2 * dof) + 200, epsabs=1e-14, epsrel=1e-13, limit=500)[0]


@requires_mnist
def test_c10_sign_statistics(criterion, pss_run, oracle_a, seed_split):

    p = np.full((28, 28), 0.37)
    q = np.full((28, 28), 0.58)
    fixed = chi_square(FrequencyTriple(p, q, p * q, 10000))
    a_ok = fixed.stat == 0.0 and fixed.p_value == 1.0

    rand = chi_square(frequencies(random_sign_sequence(10000, (28, 28), SeededRng(1)),
                                  random_sign_sequence(10000, (28, 28), SeededRng(2))))
    b_ok = rand.p_value > 0.5

    _, ev = seed_split
    sub = sign_sequence(pss_run[0].model, ev.inputs, ev.labels, (28, 28), source="substitute")
    orc = sign_sequence(oracle_a, ev.inputs, ev.labels, (28, 28), source="oracle")
    trained = chi_square(frequencies(sub, orc))
    c_ok = trained.p_value < 1e-5

    grid = [(1, 0.5), (1, 3.841), (4, 2.0), (4, 9.488), (729, 596.0), (729, 729.0), (729, 850.0)]
    worst = max(abs(chi_square_sf(s, d) - _tail_by_quadrature(s, d)) for d, s in grid)
    d_ok = worst < 1e-8

    ok = a_ok and b_ok and c_ok and d_ok
    criterion(10, ok, f"(a) fixed point stat={fixed.stat} p={fixed.p_value}; "
                      f"(b) random stat={rand.stat:.1f} p={rand.p_value:.4f}; "
                      f"(c) substitute vs oracle stat={trained.stat:.1f} p={trained.p_value:.3g}; "
                      f"(d) max |sf - quad| {worst:.2e}")
    assert ok


# -- 11. oracle service ------------------------------------------------------------------


def _post(url, x):
    req = urllib.request.Request(url + "/v1/label", data=json.dumps({"input": x}).encode(), method="POST")
    try:
        with urllib.request.urlopen(req) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def test_c11_oracle_service_equivalence(criterion):

    model = Network.init(get_architecture("A", 0.25), SeededRng(7))
    X = SeededRng(8).uniform(size=(1000, 784))
    budget = len(X)
    mismatches, schema_ok = 0, True
    with serve(model, budget=budget) as svc:
        for x in X:
            code, body = _post(svc.url, x.tolist())
            schema_ok &= code == 200 and set(body) == {"label"}
            mismatches += body.get("label") != predict_label(model, x)
        over, _ = _post(svc.url, X[0].tolist())
        served = svc.total_queries
    ok = mismatches == 0 and schema_ok and over == 429 and served == budget
    criterion(11, ok, f"{len(X)} HTTP labels, {mismatches} mismatches vs local; "
                      f"schema {{label}} only: {schema_ok}; query {budget + 1} -> HTTP {over}")
    assert ok


# -- 12. determinism ----------------------------------------------------------------------


DETERMINISM_CONFIG = """
[run]
seed = 9

[data]
train_size = 3000

[oracle]
kind = lr
epochs = 2

[substitute]
arch = A@0.125
seeds = 30
max_rho = 2
epochs = 3
holdout = 300

[craft]
method = both
fgsm_eps = 0.1, 0.3
jsma_upsilon = 0.07, 0.14
jsma_samples = 10
samples = 300
"""


@requires_mnist
def test_c12_attack_determinism(criterion, tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(DETERMINISM_CONFIG)
    assert cli_main(["train-oracle", "--config", str(ini), "--out", str(tmp_path / "oracle")]) == 0
    cfg = DETERMINISM_CONFIG.replace("[oracle]\n", f"[oracle]\nmodel = {tmp_path / 'oracle' / 'oracle.model'}\n")
    ini.write_text(cfg)
    for out in ("one", "two"):
        assert cli_main(["attack", "--config", str(ini), "--out", str(tmp_path / out)]) == 0
    names = sorted(p.name for p in (tmp_path / "one").glob("*.csv"))
    same = [n for n in names if (tmp_path / "one" / n).read_bytes() == (tmp_path / "two" / n).read_bytes()]
    ok = len(names) > 0 and same == names
    criterion(12, ok, f"{len(same)}/{len(names)} CSV files byte-identical across two attack runs ({', '.join(names)})")
    assert ok
