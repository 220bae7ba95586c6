"""HTTP annotation sessions over the learning loop.

Each session runs the engine in a background thread with an oracle that
blocks on a pending query batch. Request handlers expose the batch,
accumulate submitted labels, and apply them atomically once the batch is
complete, at which point the loop resumes. Sessions are in-memory.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import FileResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from ceal import data, engine, harness
from ceal.data import Dataset
from ceal.engine import CealConfig, IterationReport, Oracle

PHASE_TRAINING = "training"
PHASE_AWAITING = "awaiting_labels"
PHASE_FINISHED = "finished"

# interactive sessions default to a small pool and batch so a human can
# realistically work through them
INTERACTIVE_DEFAULTS = {
    "dataset": {
        "kind": "synthetic",
        "class_count": 4,
        "per_class": 75,
        "dim": 16,
        "separation": 3.0,
        "seed": 7,
    },
    "ceal": {"query_size": 10},
}


class SessionClosed(RuntimeError):
    """Raised inside the engine thread when its session is shut down."""


class Session:
    """One annotation session; all mutable state sits behind one lock."""

    def __init__(
        self,
        session_id: str,
        train_pool: Dataset,
        test_set: Dataset,
        cfg: CealConfig,
        init_fraction: float,
        preload_seed_labels: bool,
    ):
        self.session_id = session_id
        self.train_pool = train_pool
        self.test_set = test_set
        self.cfg = cfg
        self.init_fraction = init_fraction
        self.preload_seed_labels = preload_seed_labels
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.phase = PHASE_TRAINING
        self.pending: list[int] = []
        self.pending_scores: dict[int, float] = {}
        self.collected: dict[int, int] = {}
        self.reports: list[IterationReport] = []
        self.query_batches: list[list[int]] = []
        self.closed = False
        self.error: str | None = None
        self.thread: threading.Thread | None = None

    # -- engine side ------------------------------------------------------

    def await_labels(self, ids: list[int], scores: list[float] | None) -> list[int]:
        """Publish a pending batch and block until it is fully labeled."""
        with self.cond:
            self.pending = list(ids)
            self.pending_scores = dict(zip(ids, scores or [0.0] * len(ids)))
            self.collected = {}
            self.phase = PHASE_AWAITING
            self.cond.notify_all()
            while not self.closed and len(self.collected) < len(self.pending):
                self.cond.wait()
            if self.closed:
                raise SessionClosed(self.session_id)
            labels = [self.collected[i] for i in self.pending]
            self.query_batches.append(list(self.pending))
            self.pending = []
            self.pending_scores = {}
            self.collected = {}
            self.phase = PHASE_TRAINING
            return labels

    def record_report(self, report: IterationReport) -> None:
        with self.lock:
            self.reports.append(report)

    def finish(self, error: str | None = None) -> None:
        with self.cond:
            self.phase = PHASE_FINISHED
            self.error = error
            self.cond.notify_all()

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify_all()

    # -- handler side -----------------------------------------------------

    def submit(self, labels: dict[int, int]) -> tuple[int, int]:
        """Accumulate labels; the whole request is rejected on any bad entry."""
        m = self.train_pool.class_count
        with self.cond:
            if self.phase != PHASE_AWAITING:
                raise HTTPException(status_code=409, detail=f"phase is {self.phase}")
            pending = set(self.pending)
            for sample_id, label in labels.items():
                if sample_id not in pending:
                    raise HTTPException(
                        status_code=400, detail=f"sample {sample_id} is not pending"
                    )
                if sample_id in self.collected:
                    raise HTTPException(
                        status_code=400, detail=f"sample {sample_id} already labeled"
                    )
                if not 0 <= label < m:
                    raise HTTPException(
                        status_code=400, detail=f"label {label} outside [0, {m})"
                    )
            self.collected.update(labels)
            remaining = len(self.pending) - len(self.collected)
            if remaining == 0:
                self.phase = PHASE_TRAINING
                self.cond.notify_all()
            return len(labels), remaining

    def snapshot(self) -> dict:
        with self.lock:
            latest = self.reports[-1] if self.reports else None
            return {
                "session_id": self.session_id,
                "phase": self.phase,
                "iteration": latest.iteration if latest else None,
                "pct_labeled": latest.pct_labeled if latest else 0.0,
                "test_accuracy": latest.test_accuracy if latest else None,
                "delta": latest.delta if latest else self.cfg.delta0,
                "pseudo_count": latest.pseudo_count if latest else 0,
                "pseudo_error_rate": latest.pseudo_error_rate if latest else 0.0,
                "annotations_cumulative": latest.annotations_cumulative if latest else 0,
                "pending_count": len(self.pending),
                "class_count": self.train_pool.class_count,
                "class_names": self.train_pool.class_names,
                "history": [
                    {
                        "iteration": r.iteration,
                        "pct_labeled": r.pct_labeled,
                        "test_accuracy": r.test_accuracy,
                        "pseudo_count": r.pseudo_count,
                        "pseudo_error_rate": r.pseudo_error_rate,
                        "delta": r.delta,
                        "annotations_cumulative": r.annotations_cumulative,
                    }
                    for r in self.reports
                ],
                "error": self.error,
            }

    def wait_for_phase(self, phases: set[str], timeout: float = 120.0) -> None:
        with self.cond:
            self.cond.wait_for(
                lambda: self.phase in phases or self.error is not None, timeout=timeout
            )


class _SessionOracle(Oracle):
    """Seed batch optionally answered from ground truth, the rest interactive."""

    def __init__(self, session: Session):
        self._session = session
        self._preload = (
            session.train_pool.labels if session.preload_seed_labels else None
        )

    def label_batch(
        self, sample_ids: list[int], scores: list[float] | None = None
    ) -> list[int]:
        if self._preload is not None:
            truth = self._preload
            self._preload = None
            return [int(truth[i]) for i in sample_ids]
        return self._session.await_labels(sample_ids, scores)


def _session_worker(session: Session) -> None:
    try:
        engine.run(
            session.train_pool,
            session.cfg,
            _SessionOracle(session),
            init_fraction=session.init_fraction,
            test_set=session.test_set,
            on_report=session.record_report,
        )
        session.finish()
    except SessionClosed:
        session.finish(error="session closed")
    except Exception as exc:  # surfaced through get_status
        session.finish(error=str(exc))


def build_session(payload: dict) -> Session:
    raw = {
        "dataset": {**INTERACTIVE_DEFAULTS["dataset"], **payload.get("dataset", {})},
        "split": payload.get("split", {}),
        "ceal": {**INTERACTIVE_DEFAULTS["ceal"], **payload.get("ceal", {})},
    }
    spec = harness.spec_from_dict(raw)
    dataset = harness.load_source(spec.source)
    train_pool, test_set = data.split(dataset, spec.split)
    if payload.get("normalize_features"):
        stats = data.feature_stats(train_pool)
        train_pool = data.normalize(train_pool, stats)
        test_set = data.normalize(test_set, stats)
    return Session(
        session_id=uuid.uuid4().hex,
        train_pool=train_pool,
        test_set=test_set,
        cfg=spec.ceal,
        init_fraction=spec.split.init_fraction,
        preload_seed_labels=bool(payload.get("preload_seed_labels", True)),
    )


def create_app(images_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="ceal annotation service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    app.state.images_dir = images_dir

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions")
    def create_session(payload: dict = Body(default={})) -> dict:
        try:
            session = build_session(payload)
        except (ValueError, TypeError, KeyError, OSError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid spec: {exc}")
        sessions[session.session_id] = session
        session.thread = threading.Thread(
            target=_session_worker, args=(session,), daemon=True
        )
        session.thread.start()
        # block until the first query batch (or immediate finish) so the
        # caller always sees a well-defined phase
        session.wait_for_phase({PHASE_AWAITING, PHASE_FINISHED})
        snap = session.snapshot()
        return {
            "session_id": session.session_id,
            "phase": snap["phase"],
            "class_count": snap["class_count"],
            "class_names": snap["class_names"],
        }

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.phase != PHASE_AWAITING:
                raise HTTPException(
                    status_code=409, detail=f"no pending batch; phase is {session.phase}"
                )
            items = []
            for sample_id in session.pending:
                display: dict = {"kind": "features"}
                if images_dir and data.sidecar_image_path(images_dir, sample_id):
                    display = {"kind": "image", "url": f"/samples/{sample_id}/image"}
                else:
                    preview = session.train_pool.features[sample_id][:16]
                    display["values"] = [round(float(v), 4) for v in preview]
                items.append(
                    {
                        "sample_id": sample_id,
                        "score": session.pending_scores.get(sample_id, 0.0),
                        "label": session.collected.get(sample_id),
                        "display": display,
                    }
                )
            return {
                "session_id": session_id,
                "phase": session.phase,
                "items": items,
                "labeled_so_far": len(session.collected),
            }

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, payload: dict = Body(...)) -> dict:
        session = get_session(session_id)
        raw = payload.get("labels")
        if not isinstance(raw, list) or not raw:
            raise HTTPException(status_code=400, detail="labels must be a non-empty list")
        labels: dict[int, int] = {}
        for entry in raw:
            try:
                sample_id, label = int(entry["sample_id"]), int(entry["label"])
            except (KeyError, TypeError, ValueError):
                raise HTTPException(
                    status_code=400, detail="each entry needs sample_id and label"
                )
            if sample_id in labels:
                raise HTTPException(
                    status_code=400, detail=f"duplicate sample_id {sample_id}"
                )
            labels[sample_id] = label
        accepted, remaining = session.submit(labels)
        with session.lock:
            phase = session.phase
        return {
            "session_id": session_id,
            "phase": phase,
            "accepted": accepted,
            "remaining": remaining,
        }

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str) -> dict:
        return get_session(session_id).snapshot()

    @app.get("/samples/{sample_id}/image")
    def get_image(sample_id: int):
        if not images_dir:
            raise HTTPException(status_code=404, detail="no image directory configured")
        path = data.sidecar_image_path(images_dir, sample_id)
        if path is None:
            raise HTTPException(status_code=404, detail="no image for this sample")
        return FileResponse(path, media_type="image/png")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/")
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app


def close_all_sessions(app: FastAPI) -> None:
    """Unblock and retire every session thread (test teardown helper)."""
    for session in list(app.state.sessions.values()):
        session.close()
        if session.thread is not None:
            session.thread.join(timeout=5)


def serve(
    port: int = 8080, images_dir: str | None = None, ui_dir: str | None = None
) -> None:
    import uvicorn

    uvicorn.run(create_app(images_dir=images_dir, ui_dir=ui_dir), host="0.0.0.0", port=port)
