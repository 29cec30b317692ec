"""Pydantic request/response models for the HTTP API.

Powers cross this boundary in dBm; the core works in watts.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..scenario import ScenarioConfig, dbm_to_watts, watts_to_dbm


class ScenarioModel(BaseModel):
    """Scenario parameters as they appear in config files (dBm at the boundary)."""

    area_x: float = Field(default=30.0, description="service area length along the waveguide, m")
    area_y: float = Field(default=10.0, description="service area width, m")
    waveguide_height: float = Field(default=3.0, description="waveguide height, m")
    frame_duration: float = Field(default=1.0, description="frame length T, s")
    num_devices: int = Field(default=4, description="number of devices K")
    num_antennas: int = Field(default=4, description="number of pinching antennas M")
    bs_power_dbm: float = Field(default=43.0, description="base-station transmit power, dBm")
    noise_psd: float = Field(default=-174.0, description="noise power spectral density, dBm/Hz")
    bandwidth: float = Field(default=100e6, description="signal bandwidth, Hz")
    cycles_per_bit: float = Field(default=200.0, description="task computation intensity")
    chip_kappa: float = Field(default=1e-28, description="CPU power coefficient")
    harvest_efficiency: float = Field(default=0.8, description="energy conversion efficiency")
    carrier_freq: float = Field(default=28e9, description="carrier frequency, Hz")
    refractive_index: float = Field(default=1.4, description="effective refractive index")
    min_spacing: float = Field(default=5e-3, description="minimum antenna separation, m")
    rng_seed: int = Field(default=0, description="base RNG seed")

    def to_config(self) -> ScenarioConfig:
        data = self.model_dump()
        data["bs_power"] = dbm_to_watts(data.pop("bs_power_dbm"))
        return ScenarioConfig(**data)

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "ScenarioModel":
        return cls(
            area_x=config.area_x,
            area_y=config.area_y,
            waveguide_height=config.waveguide_height,
            frame_duration=config.frame_duration,
            num_devices=config.num_devices,
            num_antennas=config.num_antennas,
            bs_power_dbm=watts_to_dbm(config.bs_power),
            noise_psd=config.noise_psd,
            bandwidth=config.bandwidth,
            cycles_per_bit=config.cycles_per_bit,
            chip_kappa=config.chip_kappa,
            harvest_efficiency=config.harvest_efficiency,
            carrier_freq=config.carrier_freq,
            refractive_index=config.refractive_index,
            min_spacing=config.min_spacing,
            rng_seed=config.rng_seed,
        )


class EngineOptionsModel(BaseModel):
    outer_tol: float = Field(default=1e-6, gt=0)
    max_outer: int = Field(default=30, ge=1)
    pso_particles: int = Field(default=50, ge=1)
    pso_max_iters: int = Field(default=200, ge=1)
    pso_starts: int = Field(default=4, ge=1)


class SolveRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    scheme: str = Field(default="proposed")
    seed: int | None = Field(default=None, description="overrides scenario.rng_seed")
    options: EngineOptionsModel = Field(default_factory=EngineOptionsModel)


class SolveResponse(BaseModel):
    scheme: str
    seed: int
    objective_bits: float
    harvested_joules: float
    tau1: float
    tau2: float
    outer_iters: int
    converged: bool
    feasible: bool
    uplink_positions: list[float]
    downlink_positions: list[float]
    radiation: list[float]
    powers_w: list[float]
    frequencies_hz: list[float]
    objective_trace: list[float]


class SweepRequestSpec(BaseModel):
    param: str
    values: list[float]
    schemes: list[str]
    seeds: list[int] = Field(default_factory=lambda: list(range(20)))
    workers: int = Field(default=1, ge=1)


class SweepRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    sweep: SweepRequestSpec
    options: EngineOptionsModel = Field(default_factory=EngineOptionsModel)


class SweepRowModel(BaseModel):
    sweep_param: str
    value: float
    scheme: str
    seed: int
    objective_bits: float
    harvested_joules: float
    tau1: float
    tau2: float
    outer_iters: int


class SweepFailureModel(BaseModel):
    value: float
    scheme: str
    seed: int
    error: str
    kind: str = "internal"


class JobSubmitted(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    state: str  # queued | running | done | failed
    error_kind: str | None = None
    error: str | None = None
    rows: list[SweepRowModel] | None = None
    failures: list[SweepFailureModel] | None = None


class TraceRequest(BaseModel):
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    seed: int = 0
    options: EngineOptionsModel = Field(default_factory=EngineOptionsModel)


class TraceRowModel(BaseModel):
    outer_iter: int
    objective_bits: float
    block: str
    delta_bits: float
    feasible: bool


class TraceResponse(BaseModel):
    seed: int
    converged: bool
    rows: list[TraceRowModel]
    csv: str


class HealthResponse(BaseModel):
    status: str
    jobs_running: int


class ErrorBody(BaseModel):
    error_kind: str  # configuration | infeasible | internal
    detail: str
