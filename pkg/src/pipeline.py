"""
分析流水线 - validate / classify / spectrum / compare / timoshenko 五个命令
每个流水线读取规格文件，返回可写出的 PipelineResult
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import pandas as pd

from .boundary import regularity
from .bvp_core import DiracBVP, validate_zero_block_diagonal
from .config_loader import get_setting
from .errors import ValidationError
from .spectra import (classify_bvp, default_strip, modified_delta0, pair_spectra, spectrum_from_polynomial,
                      zeros_in_window)
from .timoshenko import (equal_speed_data, gauge_factor, reduce_to_dirac, tim_asymptotic_branches, tim_regularity,
                         tim_spectrum_check, verify_speeds, EQUAL)
from .tools.spec_loader import BVPSpec, BeamSpec, load_spec

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    command: str
    input: Path
    reference: Optional[Path] = None
    window: Optional[Tuple[float, float]] = None
    strip: Optional[float] = None
    tol: Optional[float] = None
    fmt: str = "json"
    out: Optional[Path] = None
    jobs: Optional[int] = None

    def __post_init__(self):
        self.input = Path(self.input)
        if self.reference is not None:
            self.reference = Path(self.reference)
        if self.out is not None:
            self.out = Path(self.out)
        if self.window is not None:
            a, b = (float(v) for v in self.window)
            if not b > a:
                raise ValidationError(f"窗口为空: [{a}, {b}]", window=self.window)
            self.window = (a, b)
        if self.strip is not None and not self.strip > 0:
            raise ValidationError(f"带宽必须为正: {self.strip}", strip=self.strip)
        if self.tol is not None and not self.tol > 0:
            raise ValidationError(f"容限必须为正: {self.tol}", tol=self.tol)
        if self.fmt not in ("csv", "json"):
            raise ValidationError(f"未知的输出格式: {self.fmt}", fmt=self.fmt)
        if self.jobs is not None and self.jobs < 1:
            raise ValidationError(f"并行度必须为正: {self.jobs}", jobs=self.jobs)

    def require_window(self) -> Tuple[float, float]:
        if self.window is None:
            raise ValidationError(f"命令 {self.command} 需要 --window a,b")
        return self.window

    def to_dict(self) -> dict:
        return {"command": self.command, "input": str(self.input),
                "reference": str(self.reference) if self.reference else None,
                "window": list(self.window) if self.window else None, "strip": self.strip,
                "tol": self.tol if self.tol is not None else float(get_setting("root_tol")),
                "format": self.fmt, "jobs": self.jobs or int(get_setting("jobs"))}


@dataclass
class PipelineResult:
    payload: Dict[str, Any]
    frame: Optional[pd.DataFrame] = None
    exit_code: int = 0

    def to_dict(self) -> dict:
        return self.payload

    def to_frame(self) -> pd.DataFrame:
        if self.frame is not None:
            return self.frame
        from .tools.report_writer import flatten
        return flatten(self.payload)


class AnalysisPipeline(ABC):
    """命令流水线基类"""

    name: str = ""

    def __call__(self, config: RunConfig) -> PipelineResult:
        logger.info("运行 %s: %s", self.name, config.input)
        result = self.run(config)
        result.payload.setdefault("config", config.to_dict())
        return result

    @abstractmethod
    def run(self, config: RunConfig) -> PipelineResult:
        pass


def _bvp_summary(bvp: DiracBVP) -> dict:
    profile = bvp.profile
    return {"n": profile.n, "ell": profile.ell, "b": profile.b.tolist(), "n_minus": profile.n_minus,
            "order": list(profile.order), "blocks": [list(b) for b in profile.blocks],
            "theta": profile.theta}


def _as_bvp(spec) -> DiracBVP:
    if isinstance(spec, BVPSpec):
        return spec.build()
    return reduce_to_dirac(spec.build())


class ValidatePipeline(AnalysisPipeline):
    """模式校验 + 权剖面/势矩阵/边界条件不变量"""

    name = "validate"

    def run(self, config: RunConfig) -> PipelineResult:
        spec = load_spec(config.input)
        payload: Dict[str, Any] = {"schema": spec.schema_, "valid": True}
        if isinstance(spec, BVPSpec):
            bvp = spec.build()
            block = validate_zero_block_diagonal(bvp.Q, bvp.profile)
            payload.update(_bvp_summary(bvp))
            payload["regularity"] = regularity(bvp.C, bvp.D, bvp.profile).to_dict()
            payload["zero_block_diagonal"] = {"ok": block.ok, "violations": [list(v) for v in block.violations]}
        else:
            model = spec.build()
            payload["speeds"] = verify_speeds(model)
            payload["regularity"] = tim_regularity(model).to_dict()
            payload["gauge_factor"] = gauge_factor(model)
            payload.update(_bvp_summary(reduce_to_dirac(model)))
        return PipelineResult(payload=payload)


class ClassifyPipeline(AnalysisPipeline):
    name = "classify"

    def run(self, config: RunConfig) -> PipelineResult:
        spec = load_spec(config.input)
        if isinstance(spec, BeamSpec):
            report = tim_asymptotic_branches(spec.build())
            payload = {"schema": spec.schema_, "regime": report.regime, **report.verdict.to_dict()}
        else:
            bvp = spec.build()
            payload = {"schema": spec.schema_, **classify_bvp(bvp).to_dict()}
        logger.info("判定: %s", payload["status"])
        return PipelineResult(payload=payload)


class SpectrumPipeline(AnalysisPipeline):
    name = "spectrum"

    def run(self, config: RunConfig) -> PipelineResult:
        bvp = _as_bvp(load_spec(config.input))
        report = zeros_in_window(bvp, config.require_window(), h=config.strip, tol=config.tol, jobs=config.jobs)
        return PipelineResult(payload=report.to_dict(), frame=report.to_frame())


class ComparePipeline(AnalysisPipeline):
    """计算谱与参考问题的谱按 o(1) 配对；参考问题无势时用 Δ₀ 的精确零点"""

    name = "compare"

    def run(self, config: RunConfig) -> PipelineResult:
        if config.reference is None:
            raise ValidationError("compare 需要 --reference 文件")
        window = config.require_window()
        bvp = _as_bvp(load_spec(config.input))
        ref = _as_bvp(load_spec(config.reference))
        h = config.strip
        if h is None:
            h = max(default_strip(modified_delta0(bvp)), default_strip(modified_delta0(ref)))
        spectrum = zeros_in_window(bvp, window, h=h, tol=config.tol, jobs=config.jobs)
        if all(ref.Q.is_zero_entry(j, k) for j in range(ref.n) for k in range(ref.n)):
            reference = spectrum_from_polynomial(modified_delta0(ref), window, h, tol=config.tol)
        else:
            reference = zeros_in_window(ref, window, h=h, tol=config.tol, jobs=config.jobs)
        pairing = pair_spectra(spectrum, reference)
        payload = {"spectrum": spectrum.to_dict(), "reference": reference.to_dict(), "pairing": pairing.to_dict()}
        exit_code = pairing.mismatch.exit_code if pairing.mismatch is not None else 0
        return PipelineResult(payload=payload, frame=pairing.to_frame(), exit_code=exit_code)


class TimoshenkoPipeline(AnalysisPipeline):
    name = "timoshenko"

    def run(self, config: RunConfig) -> PipelineResult:
        spec = load_spec(config.input)
        if not isinstance(spec, BeamSpec):
            raise ValidationError("timoshenko 需要 tim-beam/1 文件", schema=spec.schema_)
        model = spec.build()
        check = tim_spectrum_check(model, config.require_window(), h=config.strip, tol=config.tol, jobs=config.jobs)
        payload = check.to_dict()
        payload["regularity"] = tim_regularity(model).to_dict()
        if model.speeds == EQUAL:
            payload["equal_speeds"] = equal_speed_data(model).to_dict()
        frame = check.pairing.to_frame()
        exit_code = check.pairing.mismatch.exit_code if check.pairing.mismatch is not None else 0
        return PipelineResult(payload=payload, frame=frame, exit_code=exit_code)


pipeline_map = {
    "validate": ValidatePipeline,
    "classify": ClassifyPipeline,
    "spectrum": SpectrumPipeline,
    "compare": ComparePipeline,
    "timoshenko": TimoshenkoPipeline,
}


def get_pipeline(command: str) -> AnalysisPipeline:
    if command not in pipeline_map:
        raise ValidationError(f"不支持的命令: {command}。支持的命令: {list(pipeline_map.keys())}")
    return pipeline_map[command]()
