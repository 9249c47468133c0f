"""Run configuration: an INI-style ``key = value`` file with sections.

Every key can also be given on the command line as ``--key value``
(``_`` and ``-`` are interchangeable). Command-line values win.
"""

import configparser
import os
from dataclasses import dataclass

from .embed import OPERATORS
from .errors import ConfigError
from .factorize import METHODS, ToffeeConfig
from .ingest import STRATEGIES, WEIGHTINGS, EdgeListFormat, SnapshotSpec
from .linkpred import default_rank


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    text = str(text).strip()
    return None if text.lower() in ("", "none") else int(text)


def _delimiter(text):
    low = str(text).strip().lower()
    if low in ("", "none", "whitespace"):
        return None
    return "\t" if low == "tab" else str(text).strip()


def _int_list(text):
    """``"0, 1, 5"`` or ``"0-9"`` (inclusive range) or a mix of both."""
    out = []
    for part in str(text).replace(",", " ").split():
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _str_list(text):
    return [p for p in str(text).replace(",", " ").split() if p]


# key: (section, parser, default)
SCHEMA = {
    "path": ("data", str, ""),
    "src_col": ("data", int, 0),
    "dst_col": ("data", int, 1),
    "time_col": ("data", int, 2),
    "weight_col": ("data", _opt_int, None),
    "delimiter": ("data", _delimiter, None),
    "directed": ("data", _bool, False),
    "bins": ("snapshot", int, 32),
    "strategy": ("snapshot", str, "auto"),
    "weighting": ("snapshot", str, "binary"),
    "symmetrize": ("snapshot", _bool, True),
    "method": ("model", str, "toffee"),
    "rank": ("model", int, 0),
    "lambda_a": ("model", float, 1e-3),
    "lambda_r": ("model", float, 1e-3),
    "rel_tol": ("model", float, 1e-4),
    "max_iters": ("model", int, 500),
    "seed": ("model", int, 0),
    "operators": ("eval", _str_list, list(OPERATORS)),
    "seeds": ("eval", _int_list, list(range(10))),
    "split_fraction": ("eval", float, 0.75),
    "l2": ("eval", float, 1e-4),
    "grid_search": ("eval", _bool, False),
    "validation_seed": ("eval", int, 10_000),
    "n_values": ("benchmark", _int_list, [200]),
    "t_values": ("benchmark", _int_list, [8, 16, 32, 64]),
    "bench_rank": ("benchmark", int, 16),
    "bench_iters": ("benchmark", int, 5),
    "density": ("benchmark", float, 0.1),
    "repeats": ("benchmark", int, 3),
    "out": ("run", str, "out"),
    "threads": ("run", _opt_int, None),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def edge_format(self):
        return EdgeListFormat(
            src=self.src_col,
            dst=self.dst_col,
            time=self.time_col,
            weight=self.weight_col,
            delimiter=self.delimiter,
            directed=self.directed,
        )

    @property
    def snapshot(self):
        return SnapshotSpec(self.bins, self.strategy, self.weighting, self.symmetrize)

    def model(self, n_nodes=None):
        rank = self.rank
        if rank == 0:
            if n_nodes is None:
                raise ConfigError("rank = 0 (automatic) needs the node count")
            rank = min(default_rank(n_nodes), n_nodes)
        return ToffeeConfig(
            rank=rank,
            lambda_A=self.lambda_a,
            lambda_R=self.lambda_r,
            max_iters=self.max_iters,
            rel_tol=self.rel_tol,
            seed=self.seed,
        )

    def dump(self):
        """Canonical ``key = value`` text, grouped by section."""
        lines = []
        for section in dict.fromkeys(s for s, _, _ in SCHEMA.values()):
            lines.append(f"[{section}]")
            for key, (sec, _, _) in SCHEMA.items():
                if sec == section:
                    value = self.values[key]
                    if isinstance(value, list):
                        value = ", ".join(map(str, value))
                    lines.append(f"{key} = {'' if value is None else value}")
        return "\n".join(lines) + "\n"


def read_config(path=None, overrides=None):
    """Merge defaults, the optional config file and command-line overrides."""
    raw = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file {path} does not exist")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                key = key.replace("-", "_")
                if key not in SCHEMA:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                if SCHEMA[key][0] != section:
                    raise ConfigError(f"key {key!r} belongs in [{SCHEMA[key][0]}], not [{section}]")
                raw[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key.replace("-", "_")] = value

    values = {}
    for key, (_, parse, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        else:
            values[key] = list(default) if isinstance(default, list) else default
    return RunConfig(values)


def validate(cfg, need_data=True):
    """Raise :class:`ConfigError` for anything that would fail before compute."""
    v = cfg.values
    if need_data:
        if not v["path"]:
            raise ConfigError("no dataset path given")
        if not os.path.isfile(v["path"]):
            raise ConfigError(f"dataset {v['path']} does not exist")
    if v["method"] not in METHODS + ("random",):
        raise ConfigError(f"method must be one of {METHODS}")
    if v["rank"] < 0:
        raise ConfigError("rank must be >= 1 (or 0 for automatic)")
    if v["strategy"] not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}")
    if v["weighting"] not in WEIGHTINGS:
        raise ConfigError(f"weighting must be one of {WEIGHTINGS}")
    if v["bins"] < 1:
        raise ConfigError("bins must be >= 1")
    if not v["seeds"]:
        raise ConfigError("seeds must be nonempty")
    if any(s < 0 for s in v["seeds"]) or v["seed"] < 0:
        raise ConfigError("seeds must be unsigned")
    bad = [op for op in v["operators"] if op not in OPERATORS]
    if bad or not v["operators"]:
        raise ConfigError(f"operators must be a nonempty subset of {OPERATORS}")
    if not 0 < v["split_fraction"] < 1:
        raise ConfigError("split_fraction must lie in (0, 1)")
    if v["grid_search"] and v["validation_seed"] in v["seeds"]:
        raise ConfigError("validation_seed must not be one of the reported seeds")
    if v["threads"] is not None and v["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    try:
        cfg.model(n_nodes=max(v["rank"], 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
