"""HTTP service exposing on-demand stitching over a shared warm pool.

The pool is the only shared mutable state; its single-flight contract
guarantees that concurrent requests sharing a coordinate trigger at most
one generation. Artifact source and pool directory are process
configuration, never per-request.
"""

from __future__ import annotations

import os
from typing import List, Optional, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field, model_validator

from . import depset, jsonio
from .model import GlobalMethodId, MalformedCoordinate, MavenCoordinate
from .pipeline import run_stitch
from .pool import CgPool, CorruptEntry


class StitchOptions(BaseModel):
    includeAbstractTargets: bool = True


class StitchRequest(BaseModel):
    tree: Optional[dict] = None
    set: Optional[List[str]] = Field(default=None, alias="set")
    options: StitchOptions = StitchOptions()

    @model_validator(mode="after")
    def _exactly_one_input(self):
        if (self.tree is None) == (self.set is None):
            raise ValueError("exactly one of 'tree' and 'set' must be present")
        return self


def _problem(status: int, error: str, detail: str = "") -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": error, "detail": detail}
    )


def create_app(
    pool_dir: Optional[Union[str, os.PathLike]] = None,
    repo: Optional[str] = None,
    cache_dir: Optional[str] = None,
    jobs: int = 1,
) -> FastAPI:
    if pool_dir is None:
        pool_dir = os.environ.get("CGSTITCH_POOL")
    if pool_dir is None:
        raise ValueError("a pool directory is required (or set $CGSTITCH_POOL)")
    pool = CgPool(pool_dir)

    app = FastAPI(title="cgstitch", version="0.1.0")
    app.state.pool = pool

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return _problem(400, "malformed-request", str(exc.errors()))

    @app.post("/v1/stitch")
    def stitch_endpoint(body: StitchRequest):
        try:
            if body.tree is not None:
                coordinates = list(depset.mediate(depset.tree_from_obj(body.tree)).order)
            else:
                coordinates = [
                    depset.parse_coordinate_lenient(text) for text in body.set
                ]
        except (depset.MalformedTree, MalformedCoordinate) as exc:
            return _problem(400, "malformed-request", str(exc))
        try:
            run = run_stitch(
                coordinates, pool, repo=repo, cache_dir=cache_dir, jobs=jobs
            )
        except depset.ArtifactNotFound as exc:
            return _problem(404, "artifact-not-found", exc.coordinate.render())
        except depset.TransportError as exc:
            return _problem(502, "artifact-transport-error", str(exc))

        cg = run.cg
        if not body.options.includeAbstractTargets:
            abstract = {
                GlobalMethodId(coordinate, name, m.name, m.descriptor)
                for name, (coordinate, record) in run.uch.classes.items()
                for m in record.methods.values()
                if m.is_abstract
            }
            cg = type(cg)(
                nodes=cg.nodes,
                edges=frozenset(e for e in cg.edges if e.target not in abstract),
                unresolved=cg.unresolved,
                dynamic=cg.dynamic,
                skipped=cg.skipped,
                phase_stats=cg.phase_stats,
            )
        payload = jsonio.full_cg_to_obj(cg)
        payload["stats"] = {
            "poolMs": round(cg.phase_stats.pool_ms, 3),
            "uchMs": round(cg.phase_stats.uch_ms, 3),
            "stitchMs": round(cg.phase_stats.stitch_ms, 3),
            "generations": run.generations,
        }
        return JSONResponse(payload)

    @app.get("/v1/pool/{group}/{artifact}/{version}")
    def pool_entry(group: str, artifact: str, version: str):
        try:
            coordinate = MavenCoordinate(group, artifact, version)
        except MalformedCoordinate as exc:
            return _problem(400, "malformed-coordinate", str(exc))
        try:
            pcg = pool.get(coordinate)
        except CorruptEntry as exc:
            return _problem(500, "corrupt-pool-entry", str(exc))
        if pcg is None:
            return _problem(404, "not-pooled", coordinate.render())
        return Response(
            content=jsonio.partial_cg_dumps(pcg), media_type="application/json"
        )

    @app.get("/v1/stats")
    def stats_endpoint():
        stats = pool.stats()
        return {
            "requests": stats.requests,
            "hits": stats.hits,
            "misses": stats.misses,
            "generations": stats.generations,
            "avoided": stats.avoided,
        }

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    return app
