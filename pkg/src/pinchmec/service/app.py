"""FastAPI service wrapping the simulator.

Endpoints:
- GET  /health            liveness plus running-job count
- GET  /defaults          default scenario parameters
- POST /solve             run one scheme synchronously
- POST /sweeps            submit a sweep job, returns a job id
- GET  /sweeps/{id}       job status; includes rows once done
- GET  /sweeps/{id}/csv   the sweep table as text/csv (byte-stable)
- POST /trace             convergence trace for one seed

Configuration problems map to HTTP 400 with error_kind "configuration";
infeasible problems map to HTTP 409 with error_kind "infeasible".
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from .. import experiments
from ..errors import ConfigurationError, InfeasibleError
from ..orchestrator import SchemeId, run_scheme, trace_csv
from ..pso import PsoParams
from ..scenario import derive_constants, sample_devices, with_seed
from ..system_model import harvested_energy_all
from . import models
from .jobs import JobStore


def _classify(exc: Exception) -> str:
    if isinstance(exc, ConfigurationError):
        return "configuration"
    if isinstance(exc, InfeasibleError):
        return "infeasible"
    return "internal"


def _raise_http(exc: Exception):
    kind = _classify(exc)
    status = {"configuration": 400, "infeasible": 409}.get(kind, 500)
    raise HTTPException(status_code=status, detail={"error_kind": kind, "detail": str(exc)})


def _pso_params(options: models.EngineOptionsModel) -> PsoParams:
    return PsoParams(
        num_particles=options.pso_particles,
        max_iters=options.pso_max_iters,
        num_starts=options.pso_starts,
    )


def _scheme(name: str) -> SchemeId:
    try:
        return SchemeId(name)
    except ValueError:
        raise ConfigurationError(
            f"unknown scheme {name!r}; expected one of {[s.value for s in SchemeId]}"
        )


def create_app() -> FastAPI:
    app = FastAPI(
        title="pinchmec",
        description="Pinching-antenna wireless-powered MEC capacity optimization service",
        version="0.1.0",
    )
    store = JobStore()

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", jobs_running=store.running_count())

    @app.get("/defaults", response_model=models.ScenarioModel)
    def defaults():
        return models.ScenarioModel()

    @app.post("/solve", response_model=models.SolveResponse)
    def solve(request: models.SolveRequest):
        try:
            config = request.scenario.to_config()
            if request.seed is not None:
                config = with_seed(config, request.seed)
            scheme = _scheme(request.scheme)
            devices = sample_devices(config)
            state, trace = run_scheme(
                scheme,
                config,
                devices,
                outer_tol=request.options.outer_tol,
                max_outer=request.options.max_outer,
                pso_params=_pso_params(request.options),
            )
        except (ConfigurationError, InfeasibleError) as exc:
            _raise_http(exc)
        consts = derive_constants(config)
        harvested = float(
            np.sum(
                harvested_energy_all(
                    state.downlink_layout, state.w, devices, state.alloc.tau1, config, consts
                )
            )
        )
        return models.SolveResponse(
            scheme=scheme.value,
            seed=config.rng_seed,
            objective_bits=state.objective,
            harvested_joules=harvested,
            tau1=state.alloc.tau1,
            tau2=state.alloc.tau2,
            outer_iters=len(trace.records),
            converged=trace.converged,
            feasible=state.feasible,
            uplink_positions=state.uplink_layout.xs.tolist(),
            downlink_positions=state.downlink_layout.xs.tolist(),
            radiation=state.w.alpha.tolist(),
            powers_w=state.alloc.p.tolist(),
            frequencies_hz=state.alloc.f.tolist(),
            objective_trace=trace.objectives,
        )

    @app.post("/sweeps", response_model=models.JobSubmitted)
    def submit_sweep(request: models.SweepRequest):
        try:
            config = request.scenario.to_config()
            spec = experiments.SweepSpec(
                param=request.sweep.param,
                values=tuple(request.sweep.values),
                schemes=tuple(_scheme(s) for s in request.sweep.schemes),
                seeds=tuple(request.sweep.seeds),
                workers=request.sweep.workers,
            )
        except (ConfigurationError, InfeasibleError) as exc:
            _raise_http(exc)
        options = request.options

        def work():
            return experiments.run_sweep(
                spec,
                config,
                outer_tol=options.outer_tol,
                max_outer=options.max_outer,
                pso_params=_pso_params(options),
            )

        job = store.submit(work, _classify)
        return models.JobSubmitted(job_id=job.job_id)

    def _get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail={"error_kind": "not_found", "detail": job_id})
        return job

    @app.get("/sweeps/{job_id}", response_model=models.JobStatus)
    def sweep_status(job_id: str):
        job = _get_job(job_id)
        status = models.JobStatus(
            job_id=job.job_id, state=job.state, error_kind=job.error_kind, error=job.error
        )
        if job.state == "done":
            result = job.result
            status.rows = [models.SweepRowModel(**row.__dict__) for row in result.rows]
            status.failures = [
                models.SweepFailureModel(**failure.__dict__) for failure in result.failures
            ]
        return status

    @app.get("/sweeps/{job_id}/csv", response_class=PlainTextResponse)
    def sweep_csv(job_id: str):
        job = _get_job(job_id)
        if job.state != "done":
            raise HTTPException(
                status_code=409,
                detail={"error_kind": "not_ready", "detail": f"job state is {job.state}"},
            )
        try:
            return PlainTextResponse(experiments.csv_text(job.result), media_type="text/csv")
        except ValueError as exc:
            raise HTTPException(
                status_code=409, detail={"error_kind": "infeasible", "detail": str(exc)}
            )

    @app.post("/trace", response_model=models.TraceResponse)
    def trace(request: models.TraceRequest):
        try:
            config = request.scenario.to_config()
            ao_trace = experiments.run_trace(
                config,
                request.seed,
                outer_tol=request.options.outer_tol,
                max_outer=request.options.max_outer,
                pso_params=_pso_params(request.options),
            )
        except (ConfigurationError, InfeasibleError) as exc:
            _raise_http(exc)
        rows = [
            models.TraceRowModel(
                outer_iter=rec.iteration,
                objective_bits=blk.objective,
                block=blk.block,
                delta_bits=blk.delta,
                feasible=rec.feasibility.feasible,
            )
            for rec in ao_trace.records
            for blk in rec.blocks
        ]
        return models.TraceResponse(
            seed=request.seed,
            converged=ao_trace.converged,
            rows=rows,
            csv=trace_csv(ao_trace),
        )

    return app
