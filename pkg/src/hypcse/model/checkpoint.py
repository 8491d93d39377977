"""Versioned parameter checkpoints stored as ``.npz`` archives.

Layout: key ``__format__`` holds ``FORMAT_VERSION``; every other key is
``<group>/<parameter name>`` mapped to a float64 array.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

FORMAT_VERSION = 1


def save_checkpoint(path, groups: dict[str, dict[str, torch.Tensor]]) -> None:
    arrays = {"__format__": np.array(FORMAT_VERSION)}
    for group, params in groups.items():
        if "/" in group:
            raise ValueError(f"group name {group!r} may not contain '/'")
        for name, t in params.items():
            arrays[f"{group}/{name}"] = t.detach().cpu().numpy().astype(np.float64)
    with open(Path(path), "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> dict[str, dict[str, torch.Tensor]]:
    with np.load(Path(path)) as data:
        if "__format__" not in data or int(data["__format__"]) != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint format")
        out: dict[str, dict[str, torch.Tensor]] = {}
        for key in data.files:
            if key == "__format__":
                continue
            group, name = key.split("/", 1)
            out.setdefault(group, {})[name] = torch.from_numpy(data[key].copy())
    return out


def load_into(module: torch.nn.Module, params: dict[str, torch.Tensor]) -> None:
    with torch.no_grad():
        for name, p in module.named_parameters():
            if name not in params:
                raise KeyError(f"checkpoint lacks parameter {name!r}")
            p.copy_(params[name].to(dtype=p.dtype))
