"""HTTP service backing the blinded pairwise-annotation protocol.

Pairs are scheduled as a seeded random order over all unordered item
pairs, with random left/right placement per presentation. The client only
ever sees opaque tokens and slice images, never the underlying scan ids;
real identifiers exist solely in the server-side comparison log, to which
this process is the single writer.
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import secrets
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import ConfigurationError
from .metrics import NORM_PERCENTILE
from .pmas import ComparisonRecord, fit_bt, read_comparisons
from .volio import read_volume

AXES = {"y": 0, "z": 1, "x": 2}


class ComparisonIn(BaseModel):
    pair_token: str
    outcome: str
    annotator: str = "anonymous"


class _PairState:
    def __init__(self, a, b, flip, token):
        self.a = a
        self.b = b
        self.flip = flip  # True: left shows b
        self.token = token
        self.left_opaque = secrets.token_hex(8)
        self.right_opaque = secrets.token_hex(8)
        self.answered = False

    @property
    def left_item(self):
        return self.b if self.flip else self.a

    @property
    def right_item(self):
        return self.a if self.flip else self.b


class AnnotationSession:
    """Round-robin pair scheduler over the volumes in a directory."""

    def __init__(self, volumes_dir, comparisons_path, seed=0):
        volumes_dir = Path(volumes_dir)
        self.comparisons_path = Path(comparisons_path)
        self.volumes = {}
        for path in sorted(volumes_dir.glob("*.pmv")) + sorted(volumes_dir.glob("*.nii")):
            vol = np.abs(read_volume(path))
            self.volumes[path.stem] = vol
        if len(self.volumes) < 2:
            raise ConfigurationError(
                f"need at least two volumes in {volumes_dir}, found {len(self.volumes)}"
            )
        items = sorted(self.volumes)
        rng = np.random.default_rng(seed)
        pairs = [(a, b) for i, a in enumerate(items) for b in items[i + 1 :]]
        order = rng.permutation(len(pairs))
        self.pairs = []
        for k in order:
            a, b = pairs[k]
            self.pairs.append(
                _PairState(a, b, flip=bool(rng.integers(2)), token=secrets.token_hex(12))
            )
        self._done = set()
        if self.comparisons_path.exists():
            for rec in read_comparisons(self.comparisons_path):
                self._done.add(frozenset((rec.item_a, rec.item_b)))
        for p in self.pairs:
            if frozenset((p.a, p.b)) in self._done:
                p.answered = True
        self._lock = threading.Lock()
        self._by_token = {p.token: p for p in self.pairs}
        self._by_opaque = {}
        for p in self.pairs:
            self._by_opaque[p.left_opaque] = p.left_item
            self._by_opaque[p.right_opaque] = p.right_item
        self._norms = {
            item: max(float(np.percentile(vol, NORM_PERCENTILE)), 1e-12)
            for item, vol in self.volumes.items()
        }

    def n_done(self):
        return sum(1 for p in self.pairs if p.answered)

    def current_pair(self):
        for p in self.pairs:
            if not p.answered:
                return p
        return None

    def record(self, token, outcome, annotator):
        """Validate, translate left/right to item a/b and append to the log."""
        with self._lock:
            pair = self._by_token.get(token)
            if pair is None:
                return None, (404, "unknown pair token")
            if pair.answered:
                return None, (409, "pair already answered")
            if outcome not in ("left_worse", "right_worse", "similar"):
                return None, (422, f"unknown outcome {outcome!r}")
            if outcome == "similar":
                oc = "similar"
            else:
                worse_item = pair.left_item if outcome == "left_worse" else pair.right_item
                oc = "a_worse" if worse_item == pair.a else "b_worse"
            rec = ComparisonRecord(
                item_a=pair.a,
                item_b=pair.b,
                outcomes=(oc,),
                annotator=annotator,
                timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
            )
            with open(self.comparisons_path, "a", encoding="utf-8") as fh:
                fh.write(rec.to_json() + "\n")
            pair.answered = True
            return rec, None

    def slice_png(self, opaque, axis, index):
        from PIL import Image

        item = self._by_opaque.get(opaque)
        if item is None:
            return None, (404, "unknown volume token")
        if axis not in AXES:
            return None, (422, f"axis must be one of {sorted(AXES)}")
        vol = self.volumes[item]
        ax = AXES[axis]
        if not 0 <= index < vol.shape[ax]:
            return None, (
                416,
                f"slice index {index} out of range [0, {vol.shape[ax]}) for axis {axis}",
            )
        sl = np.take(vol, index, axis=ax) / self._norms[item]
        img = (np.clip(sl, 0.0, 1.0) * 255.0).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(img, mode="L").save(buf, format="PNG")
        return buf.getvalue(), None

    def dims(self, opaque):
        item = self._by_opaque.get(opaque)
        return None if item is None else self.volumes[item].shape


def create_app(volumes_dir, comparisons_path, seed=0, static_dir=None) -> FastAPI:
    session = AnnotationSession(volumes_dir, comparisons_path, seed=seed)
    app = FastAPI(title="momoc annotation service")
    app.state.session = session

    @app.get("/api/pairs/next")
    def next_pair():
        pair = session.current_pair()
        body = {
            "n_done": session.n_done(),
            "n_total": len(session.pairs),
            "done": pair is None,
        }
        if pair is None:
            body.update(pair_token=None, left_id_opaque=None, right_id_opaque=None)
        else:
            body.update(
                pair_token=pair.token,
                left_id_opaque=pair.left_opaque,
                right_id_opaque=pair.right_opaque,
            )
        return body

    @app.get("/api/volumes/{opaque}/dims")
    def volume_dims(opaque: str):
        dims = session.dims(opaque)
        if dims is None:
            return JSONResponse({"error": "unknown volume token"}, status_code=404)
        return {"dims": list(dims)}

    @app.get("/api/slices/{opaque}/{axis}/{index}.png")
    def slice_png(opaque: str, axis: str, index: int):
        data, err = session.slice_png(opaque, axis, index)
        if err:
            code, msg = err
            return JSONResponse({"error": msg}, status_code=code)
        return Response(content=data, media_type="image/png")

    @app.post("/api/comparisons", status_code=201)
    def post_comparison(body: ComparisonIn):
        rec, err = session.record(body.pair_token, body.outcome, body.annotator)
        if err:
            code, msg = err
            return JSONResponse({"error": msg}, status_code=code)
        return {
            "recorded": True,
            "n_done": session.n_done(),
            "n_total": len(session.pairs),
        }

    @app.get("/api/pmas")
    def pmas_scores():
        if not session.comparisons_path.exists():
            return {"scores": {}, "n_comparisons": 0}
        records = read_comparisons(session.comparisons_path)
        if not records:
            return {"scores": {}, "n_comparisons": 0}
        fitted = fit_bt(records)
        return {
            "scores": {k: float(v) for k, v in sorted(fitted.beta.items())},
            "n_comparisons": len(records),
        }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def serve(volumes_dir, comparisons_path, port=8008, seed=0, static_dir=None):
    import uvicorn

    app = create_app(volumes_dir, comparisons_path, seed=seed, static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
