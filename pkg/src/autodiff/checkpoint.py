"""Versioned checkpoint container for parameter stores"""

import json
import logging
import os
import zipfile
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import CheckpointError
from .params import ParameterStore

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HEADER_KEY = "__header__"
FLOAT = np.dtype('<f8')
# fixed entry timestamp so identical stores give identical bytes
ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)


def _write_npz(path: Path, arrays: Dict[str, np.ndarray]) -> None:
    """np.savez layout with fixed entry metadata (readable by np.load)"""
    with zipfile.ZipFile(path, 'w', compression=zipfile.ZIP_STORED) as archive:
        for key in sorted(arrays):
            info = zipfile.ZipInfo(f"{key}.npy", date_time=ZIP_DATE_TIME)
            with archive.open(info, 'w', force_zip64=True) as f:
                np.lib.format.write_array(f, np.asanyarray(arrays[key]), allow_pickle=False)


def save_checkpoint(
    path: Union[str, Path],
    stores: Dict[str, ParameterStore],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write stores (one namespace each) to a single .npz container.

    Every array is stored as little-endian float64 together with the Adam
    moments, step counters and metadata. The file is written atomically.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header: Dict[str, Any] = {
        'version': CHECKPOINT_VERSION,
        'extra': extra or {},
        'namespaces': {},
    }
    arrays: Dict[str, np.ndarray] = {}
    for ns, store in stores.items():
        header['namespaces'][ns] = {
            'step': store.step,
            'meta': store.meta,
            'params': {name: list(t.shape) for name, t in store.params.items()},
            'buffers': {name: list(b.shape) for name, b in store.buffers.items()},
        }
        for name, tensor in store.params.items():
            m, v = store.moments[name]
            arrays[f"{ns}:param:{name}"] = tensor.data.astype(FLOAT)
            arrays[f"{ns}:m:{name}"] = m.astype(FLOAT)
            arrays[f"{ns}:v:{name}"] = v.astype(FLOAT)
        for name, buf in store.buffers.items():
            arrays[f"{ns}:buffer:{name}"] = buf.astype(FLOAT)

    arrays[HEADER_KEY] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode('utf-8'), dtype=np.uint8
    )

    tmp = path.with_name(path.name + ".tmp")
    _write_npz(tmp, arrays)
    os.replace(tmp, path)
    logger.debug("Checkpoint written: %s", path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, ParameterStore], Dict[str, Any]]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        (stores by namespace, extra metadata)

    Raises:
        CheckpointError: If the file is missing, corrupt or of another version
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")

    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(bytes(data[HEADER_KEY]).decode('utf-8'))
            if header.get('version') != CHECKPOINT_VERSION:
                raise CheckpointError(
                    f"Unsupported checkpoint version {header.get('version')} "
                    f"(expected {CHECKPOINT_VERSION})"
                )
            stores: Dict[str, ParameterStore] = {}
            for ns, info in header['namespaces'].items():
                store = ParameterStore(meta=info.get('meta'))
                store.step = int(info['step'])
                for name, shape in info['params'].items():
                    tensor = store.register(name, data[f"{ns}:param:{name}"])
                    if list(tensor.shape) != list(shape):
                        raise CheckpointError(f"Shape mismatch for '{ns}/{name}'")
                    store.moments[name] = (
                        np.array(data[f"{ns}:m:{name}"], dtype=np.float64),
                        np.array(data[f"{ns}:v:{name}"], dtype=np.float64),
                    )
                for name in info['buffers']:
                    store.register_buffer(name, data[f"{ns}:buffer:{name}"])
                stores[ns] = store
    except CheckpointError:
        raise
    except (KeyError, ValueError, OSError) as e:
        raise CheckpointError(f"Corrupt checkpoint {path}: {str(e)}") from e

    return stores, header.get('extra', {})
