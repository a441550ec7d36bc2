import os
from pathlib import Path

import pytest

from fusion_ids.nslkdd import FEATURE_NAMES, ClassLabel, ConnectionRecord, Dataset
from fusion_ids.synth import make_synthetic

ROOT = Path(__file__).resolve().parent.parent

# First line of the public KDDTrain+.txt.
KDDTRAIN_LINE1 = (
    "0,tcp,ftp_data,SF,491,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,2,2,0.00,0.00,0.00,0.00,"
    "1.00,0.00,0.00,150,25,0.17,0.03,0.17,0.00,0.00,0.00,0.05,0.00,normal,20"
)


def nslkdd_train_path() -> Path | None:
    """KDDTrain+.txt from $NSLKDD_TRAIN or ./data/, if present."""
    candidates = []
    if os.environ.get("NSLKDD_TRAIN"):
        candidates.append(Path(os.environ["NSLKDD_TRAIN"]))
    candidates.append(ROOT / "data" / "KDDTrain+.txt")
    for c in candidates:
        if c.is_file():
            return c
    return None


def make_record(raw_label="normal", protocol="tcp", service="http", flag="SF", value=0.0,
                difficulty=None) -> ConnectionRecord:
    feats = [value] * len(FEATURE_NAMES)
    feats[1], feats[2], feats[3] = protocol, service, flag
    feats[6] = feats[11] = feats[20] = feats[21] = 0.0  # binary columns
    return ConnectionRecord(tuple(feats), ClassLabel.from_raw(raw_label), raw_label, difficulty)


def make_dataset(n_normal: int, n_attack: int, attack_name="neptune") -> Dataset:
    recs = [make_record("normal", value=float(i)) for i in range(n_normal)]
    recs += [make_record(attack_name, value=float(i)) for i in range(n_attack)]
    return Dataset(tuple(recs))


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic({"normal": 600, "dos": 300, "probe": 150, "r2l": 40, "u2r": 10}, seed=3)


_ACCEPTANCE: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _ACCEPTANCE.append((status, marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {name}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")
