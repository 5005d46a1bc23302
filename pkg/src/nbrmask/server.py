"""HTTP facade for the iterate-and-inspect tuning loop.

A session wraps one uploaded dataset plus an append-only run history; each
run masks synchronously (desk-scale data only, enforced by a row cap) and
stores the released CSV, summary counts, coefficient drift, and tracked-record
fates.  Release endpoints never expose provenance or the original data; the
audit trail sits behind a separate endpoint that is disabled unless the
server was started with it explicitly enabled.

Runs within a session are serialized by a per-session lock; sessions are
isolated and may run concurrently.  All endpoints live under /api/v1.
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .convergence import pairwise_distance_quantiles
from .dataset import (Dataset, EncodingError, ParseError, SchemaError, encode,
                      load_csv, schema_from_json, to_csv_text)
from .masker import ParamError, mask, params_from_json, validate_params
from .metric import WeightError, WeightSpec, expand_weights
from .risk import PredicateError, RecordPredicate, presence_check, track
from .utility import ModelError, RegressionSpec, compare_regression

DEFAULT_ROW_CAP = 100_000


@dataclass
class Run:
    run_id: int
    params: dict
    summary: dict
    utility: dict | None
    risk: list[dict]
    presence: dict | None
    release_csv: str
    audit_jsonl: str
    created: float

    def brief(self) -> dict:
        return {"run_id": self.run_id, "params": self.params,
                "summary": self.summary, "created": self.created}

    def full(self) -> dict:
        return {"run_id": self.run_id, "params": self.params,
                "summary": self.summary, "utility": self.utility,
                "risk": self.risk, "presence": self.presence,
                "created": self.created}


@dataclass
class Session:
    session_id: str
    dataset: Dataset
    runs: list[Run] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

def _schema_dicts(d: Dataset) -> list[dict]:
    out = []
    for spec in d.schema:
        entry: dict = {"name": spec.name, "kind": spec.kind}
        if spec.categories:
            entry["categories"] = list(spec.categories)
        out.append(entry)
    return out


def _field_error(status: int, fld: str, message: str) -> HTTPException:
    return HTTPException(status_code=status,
                         detail=[{"field": fld, "message": message}])


def create_app(data_dir: str | None = None, readonly: bool = False,
               row_cap: int = DEFAULT_ROW_CAP, audit_enabled: bool = False,
               cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="nbrmask workbench", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    store = Path(data_dir) if data_dir else None
    if store:
        store.mkdir(parents=True, exist_ok=True)
        _restore_sessions(store, sessions)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    def require_writable() -> None:
        if readonly:
            raise HTTPException(status_code=405, detail="server is read-only")

    @app.post("/api/v1/datasets")
    async def upload_dataset(request: Request):
        require_writable()
        body = await request.body()
        if not body.strip():
            raise HTTPException(status_code=400, detail="empty body")
        schema = None
        content_type = request.headers.get("content-type", "")
        if "json" in content_type:
            try:
                payload = json.loads(body)
                csv_text = payload["csv"]
                if payload.get("schema") is not None:
                    schema = schema_from_json(json.dumps(payload["schema"]))
            except (json.JSONDecodeError, KeyError, TypeError, SchemaError) as exc:
                raise HTTPException(status_code=400,
                                    detail=f"bad JSON upload: {exc}") from None
        else:
            csv_text = body.decode("utf-8", errors="replace")
        try:
            # StringIO so a pathological newline-free body is never a file path
            dataset = load_csv(io.StringIO(csv_text), schema)
        except (ParseError, SchemaError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        session = Session(session_id=uuid.uuid4().hex[:12], dataset=dataset)
        sessions[session.session_id] = session
        if store:
            _persist_dataset(store, session)
        return {"session_id": session.session_id,
                "schema": _schema_dicts(dataset),
                "n": dataset.n, "p": dataset.p}

    @app.get("/api/v1/sessions/{session_id}")
    def session_info(session_id: str):
        session = get_session(session_id)
        return {"session_id": session.session_id,
                "schema": _schema_dicts(session.dataset),
                "n": session.dataset.n, "p": session.dataset.p,
                "runs": len(session.runs)}

    @app.post("/api/v1/sessions/{session_id}/distance-quantiles")
    async def distance_quantiles(session_id: str, request: Request):
        session = get_session(session_id)
        payload = await _json_body(request)
        quantiles = payload.get("quantiles") or [0.001, 0.005, 0.01, 0.05, 0.25, 0.5]
        try:
            weights = WeightSpec(payload.get("weights") or {})
            m = encode(session.dataset)
            w = expand_weights(weights, m.blocks)
            eps = pairwise_distance_quantiles(m, w, quantiles)
        except (WeightError, ValueError, EncodingError) as exc:
            raise _field_error(422, "weights", str(exc)) from None
        return {"quantiles": list(map(float, quantiles)),
                "eps": [float(v) for v in eps]}

    @app.post("/api/v1/sessions/{session_id}/runs")
    async def create_run(session_id: str, request: Request):
        require_writable()
        session = get_session(session_id)
        if session.dataset.n > row_cap:
            raise HTTPException(
                status_code=413,
                detail=f"dataset has {session.dataset.n} rows, over the synchronous "
                       f"cap of {row_cap}; use the nbrmask CLI for batch runs")
        payload = await _json_body(request)
        if "params" not in payload:
            raise _field_error(422, "params", "missing")
        try:
            params = params_from_json(payload["params"])
            validate_params(params, session.dataset)
        except ParamError as exc:
            raise _field_error(422, exc.field, exc.message) from None

        regression = None
        if payload.get("regression"):
            reg = payload["regression"]
            try:
                if isinstance(reg, str):
                    regression = RegressionSpec.from_formula(reg)
                else:
                    regression = RegressionSpec(reg["target"],
                                                tuple(reg.get("predictors", ())))
                for name in (regression.target, *regression.predictors):
                    session.dataset.column_index(name)
            except (ModelError, SchemaError, KeyError, TypeError) as exc:
                raise _field_error(422, "regression", str(exc)) from None

        predicates = []
        for k, raw in enumerate(payload.get("predicates") or []):
            try:
                pred = RecordPredicate.from_json(raw)
                pred.validate(session.dataset)
                predicates.append(pred)
            except (PredicateError, SchemaError, KeyError, TypeError) as exc:
                raise _field_error(422, f"predicates[{k}]", str(exc)) from None

        presence_req = payload.get("presence")
        if presence_req is not None:
            try:
                column, value = presence_req["column"], presence_req["value"]
                session.dataset.column_index(column)
            except (SchemaError, KeyError, TypeError) as exc:
                raise _field_error(422, "presence", str(exc)) from None

        with session.lock:
            masked = mask(session.dataset, params)
            utility: dict | None = None
            if regression is not None:
                try:
                    utility = compare_regression(
                        session.dataset, masked.released, regression).to_json_dict()
                except ModelError as exc:
                    utility = {"error": str(exc)}
            risk_reports = []
            for pred in predicates:
                risk_reports.append(track(session.dataset, masked, pred).to_json_dict())
            presence_report = None
            if presence_req is not None:
                try:
                    presence_report = presence_check(
                        session.dataset, masked, presence_req["column"],
                        presence_req["value"],
                        rarity_threshold=int(presence_req.get("rarity_threshold", 1)),
                    ).to_json_dict()
                except PredicateError as exc:
                    raise _field_error(422, "presence", str(exc)) from None
            run = Run(
                run_id=len(session.runs) + 1,
                params=params.to_json_dict(),
                summary=masked.summary().to_json_dict(),
                utility=utility,
                risk=risk_reports,
                presence=presence_report,
                release_csv=to_csv_text(masked.released),
                audit_jsonl=masked.audit_text(),
                created=time.time(),
            )
            session.runs.append(run)
            if store:
                _persist_run(store, session, run)
        return run.full()

    @app.get("/api/v1/sessions/{session_id}/runs")
    def list_runs(session_id: str):
        session = get_session(session_id)
        return [run.brief() for run in session.runs]

    @app.get("/api/v1/sessions/{session_id}/runs/{run_id}")
    def run_detail(session_id: str, run_id: int):
        return _find_run(get_session(session_id), run_id).full()

    @app.get("/api/v1/sessions/{session_id}/runs/{run_id}/release.csv")
    def run_release(session_id: str, run_id: int):
        run = _find_run(get_session(session_id), run_id)
        return PlainTextResponse(run.release_csv, media_type="text/csv")

    @app.get("/api/v1/sessions/{session_id}/runs/{run_id}/audit")
    def run_audit(session_id: str, run_id: int):
        if not audit_enabled:
            raise HTTPException(status_code=404,
                                detail="audit endpoint disabled; start the server "
                                       "with --enable-audit to expose provenance")
        run = _find_run(get_session(session_id), run_id)
        return PlainTextResponse(run.audit_jsonl, media_type="application/jsonl")

    return app


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise HTTPException(status_code=400, detail="body is not valid JSON") from None
    if not isinstance(payload, dict):
        raise HTTPException(status_code=400, detail="expected a JSON object")
    return payload


def _find_run(session: Session, run_id: int) -> Run:
    for run in session.runs:
        if run.run_id == run_id:
            return run
    raise HTTPException(status_code=404, detail="unknown run id")


# -- optional directory persistence (JSON snapshots) --

def _persist_dataset(store: Path, session: Session) -> None:
    root = store / session.session_id
    root.mkdir(parents=True, exist_ok=True)
    (root / "dataset.csv").write_text(to_csv_text(session.dataset), encoding="utf-8")
    (root / "schema.json").write_text(
        json.dumps(_schema_dicts(session.dataset), indent=2), encoding="utf-8")


def _persist_run(store: Path, session: Session, run: Run) -> None:
    root = store / session.session_id
    root.mkdir(parents=True, exist_ok=True)
    (root / f"run_{run.run_id}.json").write_text(json.dumps({
        "run_id": run.run_id, "params": run.params, "summary": run.summary,
        "utility": run.utility, "risk": run.risk, "presence": run.presence,
        "created": run.created}, indent=2), encoding="utf-8")
    (root / f"release_{run.run_id}.csv").write_text(run.release_csv, encoding="utf-8")
    (root / f"audit_{run.run_id}.jsonl").write_text(run.audit_jsonl, encoding="utf-8")


def _restore_sessions(store: Path, sessions: dict[str, Session]) -> None:
    for root in sorted(store.iterdir()):
        csv_path = root / "dataset.csv"
        if not root.is_dir() or not csv_path.exists():
            continue
        try:
            schema = schema_from_json((root / "schema.json").read_text(encoding="utf-8"))
            dataset = load_csv(csv_path.read_text(encoding="utf-8"), schema)
        except (OSError, ParseError, SchemaError, json.JSONDecodeError):
            continue
        session = Session(session_id=root.name, dataset=dataset)
        for run_path in sorted(root.glob("run_*.json"),
                               key=lambda p: int(p.stem.split("_")[1])):
            try:
                raw = json.loads(run_path.read_text(encoding="utf-8"))
                rid = raw["run_id"]
                session.runs.append(Run(
                    run_id=rid, params=raw["params"], summary=raw["summary"],
                    utility=raw.get("utility"), risk=raw.get("risk", []),
                    presence=raw.get("presence"),
                    release_csv=(root / f"release_{rid}.csv").read_text(encoding="utf-8"),
                    audit_jsonl=(root / f"audit_{rid}.jsonl").read_text(encoding="utf-8")
                    if (root / f"audit_{rid}.jsonl").exists() else "",
                    created=raw.get("created", 0.0),
                ))
            except (OSError, KeyError, json.JSONDecodeError):
                continue
        sessions[session.session_id] = session
