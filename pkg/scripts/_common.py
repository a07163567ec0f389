import json
import sys

import numpy as np


def emit(obj, path=None):
    def plain(o):
        if isinstance(o, dict):
            return {str(k): plain(v) for k, v in o.items() if k != "trajectories"}
        if isinstance(o, (list, tuple)):
            return [plain(v) for v in o]
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return o

    text = json.dumps(plain(obj), indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    sys.stdout.write(text + "\n")
