"""Synthetic NSL-KDD-shaped traffic for tests, demos and benchmarks.

Records follow the real 41-feature layout and use real attack names, but the
values come from a handful of hand-written traffic profiles.  A fraction of
attacks (``mimic``) copy their numeric features from the normal profile, which
keeps the classes from being trivially separable.  This is not a stand-in for
the real corpus when judging detection quality.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from .nslkdd import FEATURE_NAMES, ClassLabel, ConnectionRecord, Dataset, write_records

_COL = {name: i for i, name in enumerate(FEATURE_NAMES)}

# profile -> (raw labels, protocol weights, service weights, flag weights, numeric generators)
_PROFILES: dict[str, dict] = {
    "normal": {
        "labels": ["normal"],
        "protocol": {"tcp": 0.8, "udp": 0.15, "icmp": 0.05},
        "service": {"http": 0.45, "private": 0.1, "smtp": 0.1, "ftp_data": 0.1,
                    "domain_u": 0.1, "other": 0.05, "eco_i": 0.05, "telnet": 0.05},
        "flag": {"SF": 0.9, "S0": 0.03, "REJ": 0.04, "RSTR": 0.03},
        "numeric": {
            "src_bytes": ("lognormal", 5.5, 1.2), "dst_bytes": ("lognormal", 7.0, 1.5),
            "logged_in": ("bernoulli", 0.7), "count": ("poisson", 8),
            "srv_count": ("poisson", 10), "same_srv_rate": ("beta", 8, 1),
            "dst_host_count": ("uniform", 1, 255), "dst_host_srv_count": ("uniform", 50, 255),
            "dst_host_same_srv_rate": ("beta", 6, 1), "serror_rate": ("beta", 1, 30),
            "rerror_rate": ("beta", 1, 30), "duration": ("exponential", 30),
        },
    },
    "dos": {
        "labels": ["neptune", "smurf", "back", "teardrop", "pod"],
        "protocol": {"tcp": 0.7, "icmp": 0.25, "udp": 0.05},
        "service": {"private": 0.5, "ecr_i": 0.25, "http": 0.15, "other": 0.1},
        "flag": {"S0": 0.6, "SF": 0.3, "REJ": 0.1},
        "numeric": {
            "src_bytes": ("lognormal", 3.0, 2.0), "count": ("poisson", 150),
            "srv_count": ("poisson", 15), "serror_rate": ("beta", 20, 2),
            "srv_serror_rate": ("beta", 20, 2), "same_srv_rate": ("beta", 1, 10),
            "dst_host_count": ("uniform", 200, 255), "dst_host_srv_count": ("uniform", 1, 30),
            "dst_host_serror_rate": ("beta", 20, 2), "wrong_fragment": ("bernoulli", 0.05),
        },
    },
    "probe": {
        "labels": ["satan", "ipsweep", "portsweep", "nmap"],
        "protocol": {"tcp": 0.6, "icmp": 0.3, "udp": 0.1},
        "service": {"private": 0.4, "eco_i": 0.3, "other": 0.2, "http": 0.1},
        "flag": {"REJ": 0.4, "SF": 0.3, "RSTO": 0.2, "S0": 0.1},
        "numeric": {
            "src_bytes": ("lognormal", 2.0, 1.5), "count": ("poisson", 40),
            "rerror_rate": ("beta", 10, 3), "srv_rerror_rate": ("beta", 10, 3),
            "diff_srv_rate": ("beta", 5, 3), "dst_host_count": ("uniform", 1, 255),
            "dst_host_diff_srv_rate": ("beta", 5, 2), "dst_host_rerror_rate": ("beta", 8, 3),
        },
    },
    "r2l": {
        "labels": ["guess_passwd", "warezclient", "ftp_write", "imap"],
        "protocol": {"tcp": 1.0},
        "service": {"ftp": 0.35, "ftp_data": 0.25, "telnet": 0.25, "imap4": 0.15},
        "flag": {"SF": 0.85, "RSTO": 0.15},
        "numeric": {
            "src_bytes": ("lognormal", 6.0, 1.5), "dst_bytes": ("lognormal", 5.0, 2.0),
            "hot": ("poisson", 3), "num_failed_logins": ("bernoulli", 0.3),
            "logged_in": ("bernoulli", 0.6), "is_guest_login": ("bernoulli", 0.4),
            "duration": ("exponential", 200), "count": ("poisson", 2),
        },
    },
    "u2r": {
        "labels": ["buffer_overflow", "rootkit", "loadmodule", "perl"],
        "protocol": {"tcp": 1.0},
        "service": {"telnet": 0.7, "ftp_data": 0.3},
        "flag": {"SF": 1.0},
        "numeric": {
            "src_bytes": ("lognormal", 7.0, 1.0), "dst_bytes": ("lognormal", 8.0, 1.0),
            "root_shell": ("bernoulli", 0.7), "num_file_creations": ("poisson", 2),
            "num_shells": ("bernoulli", 0.3), "hot": ("poisson", 2),
            "logged_in": ("bernoulli", 1.0), "duration": ("exponential", 100),
        },
    },
}


def _draw(rng: np.random.Generator, spec: tuple) -> float:
    kind, *p = spec
    if kind == "lognormal":
        return float(round(rng.lognormal(p[0], p[1])))
    if kind == "bernoulli":
        return float(rng.random() < p[0])
    if kind == "poisson":
        return float(rng.poisson(p[0]))
    if kind == "beta":
        return round(float(rng.beta(p[0], p[1])), 2)
    if kind == "uniform":
        return float(rng.integers(p[0], p[1] + 1))
    if kind == "exponential":
        return float(round(rng.exponential(p[0])))
    raise ValueError(kind)


def _pick(rng: np.random.Generator, weights: Mapping[str, float]) -> str:
    keys = list(weights)
    p = np.asarray([weights[k] for k in keys], float)
    return keys[rng.choice(len(keys), p=p / p.sum())]


def _record(rng: np.random.Generator, profile: str, mimic: bool) -> ConnectionRecord:
    prof = _PROFILES[profile]
    numeric_prof = _PROFILES["normal"] if mimic else prof
    feats: list = [0.0] * len(FEATURE_NAMES)
    feats[_COL["protocol_type"]] = _pick(rng, prof["protocol"])
    feats[_COL["service"]] = _pick(rng, prof["service"])
    feats[_COL["flag"]] = _pick(rng, prof["flag"])
    for name, spec in numeric_prof["numeric"].items():
        feats[_COL[name]] = _draw(rng, spec)
    raw = prof["labels"][int(rng.integers(len(prof["labels"])))]
    label = ClassLabel.from_raw(raw)
    return ConnectionRecord(tuple(feats), label, raw, int(rng.integers(10, 22)))


DEFAULT_MIX = {"normal": 600, "dos": 300, "probe": 150, "r2l": 40, "u2r": 10}


def make_synthetic(
    counts: Mapping[str, int] = DEFAULT_MIX,
    seed: int = 0,
    mimic: float = 0.1,
) -> Dataset:
    """Records per profile (normal, dos, probe, r2l, u2r), shuffled."""
    rng = np.random.default_rng(seed)
    recs = []
    for profile in ("normal", "dos", "probe", "r2l", "u2r"):
        for _ in range(int(counts.get(profile, 0))):
            is_mimic = profile != "normal" and rng.random() < mimic
            recs.append(_record(rng, profile, is_mimic))
    order = rng.permutation(len(recs))
    return Dataset(tuple(recs[i] for i in order))


def write_synthetic(path: str | Path, **kwargs) -> Dataset:
    ds = make_synthetic(**kwargs)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_records(ds, fh)
    return ds
