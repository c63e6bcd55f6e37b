"""Config file handling: TOML/JSON scenario descriptions -> ScenarioConfig.

Every key has a default, so an empty file (or none) runs the default
regime: three traveler classes, 200 days, attack window days 51-100.
Overrides use dotted paths (``attack.gamma=0.3``,
``classes.cav.share=0.2``) and must name keys that already exist.

Sentinels: ``loading.horizon = 0`` means auto (4x the departure window);
``composition.cav_share = -1`` and ``trust.wf_ws_ratio = 0`` disable
those conveniences; ``attack.targets = []`` means "select by method".
"""
from __future__ import annotations

import copy
import json
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .attack import AttackSpec
from .behavior import ClassProfile
from .loading import LoadingProfile
from .netio import (NetworkModel, TargetSet, enumerate_paths, grid,
                    load_network, load_paths, select_targets, two_link)
from .sim import ScenarioConfig

NETWORK_KINDS = ("two-link", "grid", "tntp")


def defaults() -> dict:
    return {
        "network": {
            "kind": "two-link",
            # two-link benchmark
            "c0": 1200.0, "b": 600.0, "demand": 1.0, "capacity": 0.5,
            # grid generator
            "rows": 4, "cols": 4, "grid_demand": 1800.0,
            # TNTP ingestion
            "net_file": "", "trips_file": "", "paths_file": "",
            "capacity_unit": "veh/h",
            # path enumeration (grid / tntp)
            "k": 6, "detour_cap": 2.0,
        },
        "classes": [
            {"name": "cav", "share": 0.10, "delta": 0.0, "theta": 0.004,
             "lambda_bar": 0.9, "w_f": 0.80, "w_s": 0.16, "epsilon": 360.0},
            {"name": "app", "share": 0.60, "delta": 200.0, "theta": 0.004,
             "lambda_bar": 0.7, "w_f": 0.50, "w_s": 0.10, "epsilon": 360.0},
            {"name": "exp", "share": 0.30, "delta": 400.0, "theta": 0.004,
             "lambda_bar": 0.3, "w_f": 0.30, "w_s": 0.06, "epsilon": 360.0},
        ],
        "dynamics": {
            "memory": 0.7, "forget": 0.95, "horizon_days": 200,
            "trust_mode": "dynamic", "smoothing_window": 6, "seed": 0,
            "snapshot_days": [],
        },
        "attack": {
            "gamma": 0.5, "day_start": 51, "day_end": 100,
            "method": "topological-betweenness", "n_att": 10,
            "targets": [],
        },
        "loading": {
            # affine matches the default two-link network; the grid and
            # tntp templates switch to the kinematic-wave engine
            "engine": "affine", "time_step": 5.0,
            "departure_window": 3600.0, "horizon": 0.0,
            "affine_c0": 1200.0, "affine_b": 600.0,
        },
        "composition": {"cav_share": -1.0},
        "trust": {"wf_ws_ratio": 0.0},
    }


class ConfigError(ValueError):
    pass


def _merge(base, incoming, path=""):
    for key, value in incoming.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a table")
            _merge(base[key], value, where)
        elif key == "classes":
            base[key] = _merged_classes(value)
        else:
            base[key] = _coerce(base[key], value, where)
    return base


def _merged_classes(tables) -> list:
    if not isinstance(tables, list) or not all(isinstance(t, dict) for t in tables):
        raise ConfigError("classes must be an array of tables")
    template = defaults()["classes"][0]
    out = []
    for i, tab in enumerate(tables):
        entry = {}
        for key in template:
            if key in tab:
                entry[key] = _coerce(template[key], tab[key], f"classes[{i}].{key}")
            elif key == "name":
                raise ConfigError(f"classes[{i}] needs a name")
            else:
                raise ConfigError(f"classes[{i}] ({tab.get('name')}) missing {key!r}")
        extra = set(tab) - set(template)
        if extra:
            raise ConfigError(f"classes[{i}]: unknown keys {sorted(extra)}")
        out.append(entry)
    return out


def _coerce(old, new, where):
    if isinstance(old, bool) or isinstance(new, bool):
        if isinstance(old, bool) and isinstance(new, bool):
            return new
        raise ConfigError(f"{where}: expected {type(old).__name__}")
    if isinstance(old, float) and isinstance(new, (int, float)):
        return float(new)
    if isinstance(old, int) and isinstance(new, int):
        return new
    if isinstance(old, str) and isinstance(new, str):
        return new
    if isinstance(old, list) and isinstance(new, list):
        return list(new)
    raise ConfigError(f"{where}: expected {type(old).__name__}, "
                      f"got {type(new).__name__}")


def load_config(path=None) -> dict:
    """Read TOML (default) or JSON (by .json suffix) over the defaults."""
    cfg = defaults()
    if path is None:
        return cfg
    text_path = str(path)
    try:
        if text_path.endswith(".json"):
            with open(path) as fh:
                data = json.load(fh)
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return _merge(cfg, data)


def apply_overrides(cfg: dict, pairs) -> dict:
    """Apply repeatable --set key=value pairs onto a loaded config dict."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, raw = pair.split("=", 1)
        parts = key.strip().split(".")
        value = _parse_scalar(raw.strip())
        _set_path(cfg, parts, value, key.strip())
    return cfg


def _parse_scalar(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(tok.strip()) for tok in inner.split(",")]
    return raw


def _set_path(cfg: dict, parts, value, full_key):
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = _class_by_name(node, part, full_key)
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise ConfigError(f"unknown config key {full_key!r}")
    leaf = parts[-1]
    if isinstance(node, list):
        node = _class_by_name(node, leaf, full_key)
        raise ConfigError(f"{full_key!r} addresses a class table, not a value")
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown config key {full_key!r}")
    node[leaf] = _coerce(node[leaf], value, full_key)


def _class_by_name(classes, name, full_key):
    for tab in classes:
        if tab.get("name") == name:
            return tab
    raise ConfigError(f"{full_key!r}: no class named {name!r}")


# ---------------------------------------------------------------------------
# Building runtime objects
# ---------------------------------------------------------------------------

def build_network(cfg: dict) -> NetworkModel:
    net_cfg = cfg["network"]
    kind = net_cfg["kind"]
    if kind == "two-link":
        return two_link(c0=net_cfg["c0"], b=net_cfg["b"],
                        demand=net_cfg["demand"], capacity=net_cfg["capacity"])
    if kind == "grid":
        net = grid(n=net_cfg["rows"], m=net_cfg["cols"],
                   demand=net_cfg["grid_demand"], capacity=net_cfg["capacity"])
        return enumerate_paths(net, k=net_cfg["k"], detour_cap=net_cfg["detour_cap"])
    if kind == "tntp":
        if not net_cfg["net_file"] or not net_cfg["trips_file"]:
            raise ConfigError("tntp network needs net_file and trips_file")
        net = load_network(net_cfg["net_file"], net_cfg["trips_file"],
                           capacity_unit=net_cfg["capacity_unit"])
        if net_cfg["paths_file"]:
            return load_paths(net, net_cfg["paths_file"])
        return enumerate_paths(net, k=net_cfg["k"], detour_cap=net_cfg["detour_cap"])
    raise ConfigError(f"unknown network kind {kind!r}; expected {NETWORK_KINDS}")


def resolve_targets(net: NetworkModel, cfg: dict) -> TargetSet:
    atk = cfg["attack"]
    if atk["targets"]:
        ids = tuple(sorted(int(i) for i in atk["targets"]))
        known = {a.id for a in net.links}
        missing = [i for i in ids if i not in known]
        if missing:
            raise ConfigError(f"attack.targets references unknown links {missing}")
        return TargetSet(method="explicit", n_att=len(ids), link_ids=ids)
    n_att = min(int(atk["n_att"]), len(net.links))
    return select_targets(net, atk["method"], n_att,
                          seed=cfg["dynamics"]["seed"])


def _resolve_classes(cfg: dict) -> list:
    tables = copy.deepcopy(cfg["classes"])
    ratio = cfg["trust"]["wf_ws_ratio"]
    if ratio > 0:
        for tab in tables:
            tab["w_f"] = ratio * tab["w_s"]
    cav_share = cfg["composition"]["cav_share"]
    if cav_share >= 0:
        if not 0.0 <= cav_share <= 1.0:
            raise ConfigError("composition.cav_share must lie in [0,1]")
        names = [t["name"] for t in tables]
        if names != ["cav", "app", "exp"]:
            raise ConfigError("composition.cav_share needs the default "
                              "cav/app/exp class set")
        rest = 1.0 - cav_share
        tables[0]["share"] = cav_share
        tables[1]["share"] = rest * 2.0 / 3.0
        tables[2]["share"] = rest / 3.0
    return [ClassProfile(**tab) for tab in tables]


def build_scenario(cfg: dict) -> ScenarioConfig:
    net = build_network(cfg)
    targets = resolve_targets(net, cfg)
    atk = cfg["attack"]
    attack = AttackSpec(gamma=atk["gamma"], targets=targets,
                        day_start=int(atk["day_start"]),
                        day_end=int(atk["day_end"]))
    load_cfg = dict(cfg["loading"])
    if cfg["network"]["kind"] == "two-link":
        # the affine benchmark always uses the two-link cost coefficients
        load_cfg["affine_c0"] = cfg["network"]["c0"]
        load_cfg["affine_b"] = cfg["network"]["b"]
    profile = LoadingProfile(
        engine=load_cfg["engine"], time_step=load_cfg["time_step"],
        departure_window=load_cfg["departure_window"],
        horizon=None if load_cfg["horizon"] <= 0 else load_cfg["horizon"],
        affine_c0=load_cfg["affine_c0"], affine_b=load_cfg["affine_b"])
    dyn = cfg["dynamics"]
    scenario = ScenarioConfig(
        net=net, classes=_resolve_classes(cfg), attack=attack, loading=profile,
        memory=dyn["memory"], forget=dyn["forget"],
        horizon_days=int(dyn["horizon_days"]), trust_mode=dyn["trust_mode"],
        smoothing_window=int(dyn["smoothing_window"]), seed=int(dyn["seed"]))
    scenario.validate()
    return scenario


def numeric_sweep_value(cfg: dict, dotted: str):
    """Fetch a dotted key, requiring a numeric leaf (sweep precondition)."""
    node = cfg
    for part in dotted.split("."):
        if isinstance(node, list):
            node = _class_by_name(node, part, dotted)
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise ConfigError(f"unknown sweep parameter {dotted!r}")
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"sweep parameter {dotted!r} is not numeric")
    return node


# ---------------------------------------------------------------------------
# Emission (for `gen`)
# ---------------------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot render {type(v).__name__} as TOML")


def emit_toml(cfg: dict) -> str:
    """Serialize a config dict in the restricted schema used here."""
    lines = []
    for section, body in cfg.items():
        if section == "classes":
            continue
        lines.append(f"[{section}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    for tab in cfg["classes"]:
        lines.append("[[classes]]")
        for key, value in tab.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def gen_config(kind: str) -> dict:
    """Ready-to-run configs for the built-in networks."""
    cfg = defaults()
    if kind == "two-link":
        cfg["network"]["kind"] = "two-link"
        cfg["loading"]["engine"] = "affine"
        cfg["attack"]["n_att"] = 1
        cfg["attack"]["targets"] = [1]
    elif kind == "grid":
        cfg["network"]["kind"] = "grid"
        cfg["loading"]["engine"] = "newell"
        # uniform 60s free-flow links admit a coarse grid; 12x faster than 5s
        cfg["loading"]["time_step"] = 60.0
    else:
        raise ConfigError(f"unknown generator {kind!r}; expected two-link or grid")
    return cfg
