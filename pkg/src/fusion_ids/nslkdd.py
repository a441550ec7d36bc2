"""NSL-KDD connection records: schema, parsing, serialization.

One record per line, 41 comma-separated features in canonical KDD order, the
raw label, and an optional difficulty score.  Any label other than exactly
``normal`` is an attack; the raw attack name is kept so attack families can be
thinned later.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence, TextIO

from .errors import ParseError

__all__ = [
    "ATTACK_FAMILIES",
    "FEATURE_NAMES",
    "SCHEMA",
    "ClassCounts",
    "ClassLabel",
    "ConnectionRecord",
    "Dataset",
    "FeatureDescriptor",
    "FeatureKind",
    "attack_family",
    "class_counts",
    "format_record",
    "parse_records",
    "read_dataset",
    "write_records",
]


class FeatureKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    BINARY = "binary"


class ClassLabel(enum.IntEnum):
    NORMAL = 0
    ATTACK = 1

    @classmethod
    def from_raw(cls, raw: str) -> "ClassLabel":
        return cls.NORMAL if raw == "normal" else cls.ATTACK

    @property
    def symbol(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class FeatureDescriptor:
    index: int
    name: str
    kind: FeatureKind


FEATURE_NAMES: tuple[str, ...] = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins",
    "logged_in", "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)

_CATEGORICAL = {"protocol_type", "service", "flag"}
_BINARY = {"land", "logged_in", "is_host_login", "is_guest_login"}


def _kind(name: str) -> FeatureKind:
    if name in _CATEGORICAL:
        return FeatureKind.CATEGORICAL
    if name in _BINARY:
        return FeatureKind.BINARY
    return FeatureKind.CONTINUOUS


SCHEMA: tuple[FeatureDescriptor, ...] = tuple(
    FeatureDescriptor(i, name, _kind(name)) for i, name in enumerate(FEATURE_NAMES)
)
N_FEATURES = len(SCHEMA)
PROTOCOL, SERVICE, FLAG = 1, 2, 3
CATEGORICAL_INDICES = tuple(d.index for d in SCHEMA if d.kind is FeatureKind.CATEGORICAL)
NUMERIC_INDICES = tuple(d.index for d in SCHEMA if d.kind is not FeatureKind.CATEGORICAL)

# Raw NSL-KDD attack names (train and test files) by family.
ATTACK_FAMILIES: dict[str, str] = {
    **dict.fromkeys(
        ["back", "land", "neptune", "pod", "smurf", "teardrop", "apache2",
         "udpstorm", "processtable", "mailbomb"], "dos"),
    **dict.fromkeys(
        ["ipsweep", "nmap", "portsweep", "satan", "mscan", "saint"], "probe"),
    **dict.fromkeys(
        ["ftp_write", "guess_passwd", "imap", "multihop", "phf", "spy",
         "warezclient", "warezmaster", "sendmail", "named", "snmpgetattack",
         "snmpguess", "xlock", "xsnoop", "worm"], "r2l"),
    **dict.fromkeys(
        ["buffer_overflow", "loadmodule", "perl", "rootkit", "httptunnel", "ps",
         "sqlattack", "xterm"], "u2r"),
}


def attack_family(raw_label: str) -> str:
    """Family of a raw label: ``normal``, one of dos/probe/r2l/u2r, or ``other``."""
    if raw_label == "normal":
        return "normal"
    return ATTACK_FAMILIES.get(raw_label, "other")


Value = float | str


@dataclass(frozen=True, slots=True)
class ConnectionRecord:
    features: tuple[Value, ...]
    label: ClassLabel
    raw_label: str = ""
    difficulty: int | None = None

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(self.features)}")
        for desc, value in zip(SCHEMA, self.features):
            is_symbol = isinstance(value, str)
            if is_symbol != (desc.kind is FeatureKind.CATEGORICAL):
                raise ValueError(f"feature {desc.name} has wrong kind: {value!r}")
        if not self.raw_label:
            object.__setattr__(self, "raw_label", self.label.symbol)
        if self.difficulty is not None and self.difficulty < 0:
            raise ValueError("difficulty must be >= 0")

    @property
    def protocol(self) -> str:
        return self.features[PROTOCOL]

    @property
    def service(self) -> str:
        return self.features[SERVICE]

    @property
    def flag(self) -> str:
        return self.features[FLAG]

    @property
    def family(self) -> str:
        return attack_family(self.raw_label)

    def replace_features(self, features: Sequence[Value]) -> "ConnectionRecord":
        return ConnectionRecord(tuple(features), self.label, self.raw_label, self.difficulty)


@dataclass(frozen=True)
class Dataset:
    records: tuple[ConnectionRecord, ...] = ()
    schema: tuple[FeatureDescriptor, ...] = SCHEMA
    skipped: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def subset(self, indices: Iterable[int]) -> "Dataset":
        recs = self.records
        return Dataset(tuple(recs[i] for i in indices), self.schema)

    def labels(self) -> list[int]:
        return [int(r.label) for r in self.records]


class ClassCounts(NamedTuple):
    normal: int
    attack: int


def class_counts(ds: Dataset | Iterable[ConnectionRecord]) -> ClassCounts:
    attack = 0
    total = 0
    for rec in ds:
        total += 1
        attack += rec.label is ClassLabel.ATTACK
    return ClassCounts(total - attack, attack)


def _parse_line(
    fields: list[str],
    lineno: int,
    vocabularies: Mapping[int, frozenset[str]] | None,
) -> ConnectionRecord:
    if len(fields) not in (N_FEATURES + 1, N_FEATURES + 2):
        raise ParseError(
            f"expected {N_FEATURES + 1} or {N_FEATURES + 2} fields, got {len(fields)}", lineno
        )
    values: list[Value] = []
    for desc, raw in zip(SCHEMA, fields):
        raw = raw.strip()
        col = desc.index + 1
        if desc.kind is FeatureKind.CATEGORICAL:
            if not raw:
                raise ParseError(f"empty symbol for {desc.name}", lineno, col)
            if vocabularies is not None and desc.index in vocabularies:
                if raw not in vocabularies[desc.index]:
                    raise ParseError(f"unknown {desc.name} symbol {raw!r}", lineno, col)
            values.append(raw)
            continue
        try:
            x = float(raw)
        except ValueError:
            raise ParseError(f"non-numeric value {raw!r} for {desc.name}", lineno, col) from None
        if not math.isfinite(x):
            raise ParseError(f"non-finite value {raw!r} for {desc.name}", lineno, col)
        if desc.kind is FeatureKind.BINARY and x not in (0.0, 1.0):
            raise ParseError(f"binary feature {desc.name} has value {raw!r}", lineno, col)
        values.append(x)
    raw_label = fields[N_FEATURES].strip()
    if not raw_label:
        raise ParseError("empty label", lineno, N_FEATURES + 1)
    difficulty = None
    if len(fields) == N_FEATURES + 2:
        try:
            difficulty = int(fields[N_FEATURES + 1])
        except ValueError:
            raise ParseError(
                f"non-integer difficulty {fields[N_FEATURES + 1]!r}", lineno, N_FEATURES + 2
            ) from None
        if difficulty < 0:
            raise ParseError("negative difficulty", lineno, N_FEATURES + 2)
    return ConnectionRecord(tuple(values), ClassLabel.from_raw(raw_label), raw_label, difficulty)


def parse_records(
    stream: TextIO | Iterable[str] | str,
    strict: bool = True,
    vocabularies: Mapping[int, Iterable[str]] | None = None,
) -> Dataset:
    """Parse NSL-KDD lines into a :class:`Dataset`.

    In strict mode the first malformed line raises :class:`ParseError` with its
    1-based line and column; otherwise malformed lines are skipped and counted
    in ``Dataset.skipped``.  ``vocabularies`` optionally restricts the symbols
    accepted for categorical feature indices.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    vocab = None
    if vocabularies is not None:
        vocab = {int(k): frozenset(v) for k, v in vocabularies.items()}
    records = []
    skipped = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        try:
            records.append(_parse_line(line.split(","), lineno, vocab))
        except ParseError:
            if strict:
                raise
            skipped += 1
    return Dataset(tuple(records), SCHEMA, skipped)


def read_dataset(paths: str | Path | Sequence[str | Path], strict: bool = True) -> Dataset:
    """Read and concatenate one or more NSL-KDD files (UTF-8, LF or CRLF)."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    records: list[ConnectionRecord] = []
    skipped = 0
    for path in paths:
        with open(path, encoding="utf-8", newline="") as fh:
            ds = parse_records(fh, strict=strict)
        records.extend(ds.records)
        skipped += ds.skipped
    return Dataset(tuple(records), SCHEMA, skipped)


def _format_value(v: Value) -> str:
    if isinstance(v, str):
        return v
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def format_record(rec: ConnectionRecord) -> str:
    fields = [_format_value(v) for v in rec.features]
    fields.append(rec.raw_label)
    if rec.difficulty is not None:
        fields.append(str(rec.difficulty))
    return ",".join(fields)


def write_records(ds: Dataset | Iterable[ConnectionRecord], stream: TextIO) -> None:
    for rec in ds:
        stream.write(format_record(rec))
        stream.write("\n")
