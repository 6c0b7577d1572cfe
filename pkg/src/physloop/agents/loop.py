"""The Generate-Simulate-Refine orchestration.

Four roles work over a shared design state: a planner decomposes the load
case into a modeling plan, an engineer emits a geometry program, a geometry
reviewer critiques it against renders and deterministic tool results, and a
structural reviewer judges the FEA outcome against the target safety-factor
range. The orchestrator routes feedback deterministically: compile and
geometry failures go back to the engineer (with bounded inner retries
before forcing a replan), structural rejections go to the planner. Agents
may inspect but can never override the deterministic check results.

One iteration is one full plan/generate/review cycle; runs terminate on an
accepted design or at the iteration cap.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from ..errors import ExtractionFailed, SchemaError
from ..fem import DEFAULT_MATERIAL, Material
from ..geometry import GeometryProgram, program_from_dict
from ..loadcase import LoadCase, VariantSpec, serialize_load_case
from ..metrics import (
    STATUS_ITERATION_CAP,
    STATUS_VALID,
    IterationRecord,
    RunRecord,
    status_failed,
)
from ..pipeline import (
    DEFAULT_RESOLUTION,
    EvalConfig,
    EvaluationOutcome,
    analysis_bounds,
    evaluate_program,
)
from ..render import DEFAULT_VIEWS, ViewSpec, encode_ppm, render_view
from .backends import (
    DEFAULT_MAX_OUTPUT_TOKENS,
    DEFAULT_TEMPERATURE,
    AgentBackend,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    MessagePart,
)

ROLE_PLANNER = "planner"
ROLE_ENGINEER = "engineer"
ROLE_GEOMETRY_REVIEWER = "geometry_reviewer"
ROLE_STRUCTURAL_REVIEWER = "structural_reviewer"
ROLE_SINGLE_AGENT = "single_agent"


def _template(name: str) -> str:
    return resources.files("physloop.agents.prompts").joinpath(name).read_text()


def _fill(template: str, values: dict[str, str]) -> str:
    out = template
    for key, value in values.items():
        out = out.replace(f"<<{key}>>", value)
    return out


@dataclass
class LoopConfig:
    model_id: str = "local"
    max_iterations: int = 10
    resolution: int = DEFAULT_RESOLUTION
    material: Material = DEFAULT_MATERIAL
    sf_range: tuple[float, float] = (2.0, 5.0)
    physics_feedback: bool = True  # False: FEA numbers excluded from prompts
    single_agent: bool = False
    inner_retries: int = 2  # engineer retries per iteration before a replan
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    run_seed: int = 0
    variant: VariantSpec = VariantSpec(geom_scale=1.0, force_scale=1.0)
    render_views: tuple[str, ...] = DEFAULT_VIEWS
    render_size: int = 256
    deterministic_timing: bool = False  # record wall_seconds as 0.0
    artifact_dir: Optional[Path] = None
    prompt_hook: Optional[Callable[[str, ChatRequest], None]] = None

    def eval_config(self) -> EvalConfig:
        return EvalConfig(
            resolution=self.resolution, material=self.material, sf_range=self.sf_range
        )


@dataclass
class DesignState:
    """Shared state the agent roles read and write during one run."""

    case: LoadCase
    plan: str = ""
    program_source: str = ""
    geometry: Optional[GeometryProgram] = None
    validation: object = None  # ValidationReport once a design was evaluated
    fem: object = None  # FemResult once the solve stage ran
    iteration: int = 0
    feedback: list[tuple[str, str]] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)


class _TokenMeter:
    def __init__(self):
        self.input = 0
        self.output = 0

    def add(self, response: ChatResponse):
        self.input += response.input_tokens
        self.output += response.output_tokens


def _balanced_json_objects(text: str):
    """Yield top-level balanced {...} substrings in order of appearance."""
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0 and start is not None:
                yield text[start : i + 1]
                start = None


def extract_program(text: str) -> tuple[GeometryProgram, str]:
    """First well-formed geometry-program JSON object in a response."""
    for candidate in _balanced_json_objects(text):
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict):
            continue
        try:
            return program_from_dict(data), candidate
        except SchemaError:
            continue
    raise ExtractionFailed("no parseable geometry program in the response")


def _voxel_size(case: LoadCase, resolution: int) -> float:
    padded = analysis_bounds(case)
    return max(padded.extent) / resolution


def _feedback_block(items: list[str]) -> str:
    if not items:
        return "No feedback yet."
    body = "\n".join(f"- {item}" for item in items)
    return f"BEGIN FEEDBACK\n{body}\nEND FEEDBACK"


def _tool_results_text(case: LoadCase, outcome: EvaluationOutcome) -> str:
    report = outcome.report
    ds = report.design_space
    lines = [
        (
            f"design_space: violated={ds.violated} "
            f"outside_volume_mm3={ds.outside_volume_mm3:.6g} "
            f"violation_ratio={ds.violation_ratio:.6g} "
            f"({100 * ds.violation_ratio:.2f}% of domain volume, "
            f"domain bounds {case.domain_bounds.to_json()})"
        )
    ]
    support_ids = set(case.support_selector_ids())
    for sid, covered in outcome.coverage.items():
        kind = "support" if sid in support_ids else "load"
        status = "covered" if covered else "EMPTY (no material in region)"
        lines.append(f"{kind}_region '{sid}': {status}")
    conn = report.connectivity
    lines.append(
        f"connectivity: component_count={conn.component_count} "
        f"all_regions_connected={conn.all_regions_connected}"
    )
    lines.append(f"meshable: {report.meshable}")
    if outcome.volume_mm3 is not None:
        lines.append(f"volume_mm3={outcome.volume_mm3:.6g}")
    return "\n".join(lines)


def _fea_text(outcome: EvaluationOutcome, sf_range: tuple[float, float]) -> str:
    fem = outcome.fem
    sf = fem.safety_factor
    if sf < sf_range[0]:
        assessment = "under-built"
    elif sf > sf_range[1]:
        assessment = "over-engineered"
    else:
        assessment = "in range"
    lines = [
        f"safety_factor={sf:.6g} target_range=[{sf_range[0]:g}, {sf_range[1]:g}] "
        f"assessment={assessment}",
        f"max_von_mises_mpa={fem.max_von_mises:.6g}",
        f"volume_mm3={outcome.volume_mm3:.6g}",
        "stress hotspots (centroid mm -> von Mises MPa):",
    ]
    for i, (centroid, vm) in enumerate(outcome.hotspots or [], start=1):
        cx, cy, cz = centroid
        lines.append(f"  {i}. ({cx:.2f}, {cy:.2f}, {cz:.2f}) -> {vm:.6g}")
    return "\n".join(lines)


def _geometry_checks_pass(outcome: EvaluationOutcome) -> bool:
    report = outcome.report
    return (
        not report.design_space.violated
        and report.fix_area_ok
        and report.load_area_ok
        and report.connectivity.all_regions_connected
        and report.meshable
    )


class _Orchestrator:
    def __init__(self, case: LoadCase, backend: AgentBackend, config: LoopConfig):
        self.case = case
        self.backend = backend
        self.config = config
        self.state = DesignState(case=case)
        self.eval_cache: dict[str, EvaluationOutcome] = {}
        self.planner_queue: list[str] = []
        self.engineer_queue: list[str] = []
        self.voxel_size = _voxel_size(case, config.resolution)
        self.case_json = serialize_load_case(case)

    # -- chat plumbing ---------------------------------------------------

    def _chat(self, role: str, parts: list[MessagePart], meter: _TokenMeter) -> ChatResponse:
        request = ChatRequest(
            model_id=self.config.model_id,
            messages=(ChatMessage(role="user", parts=tuple(parts)),),
            temperature=self.config.temperature,
            max_output_tokens=self.config.max_output_tokens,
            agent_role=role,
        )
        if self.config.prompt_hook:
            self.config.prompt_hook(role, request)
        response = self.backend.chat(request)
        meter.add(response)
        self.state.transcript.append(
            {
                "role": role,
                "prompt": request.prompt_text(),
                "images": request.image_count(),
                "response": response.text,
                "input_tokens": response.input_tokens,
                "output_tokens": response.output_tokens,
            }
        )
        return response

    def _render_parts(self, outcome: EvaluationOutcome | None) -> list[MessagePart]:
        surface = outcome.surface if outcome is not None else None
        parts = []
        for direction in self.config.render_views:
            img = render_view(
                surface,
                self.case,
                ViewSpec(
                    direction=direction,
                    width=self.config.render_size,
                    height=self.config.render_size,
                ),
            )
            parts.append(MessagePart(image_ppm=encode_ppm(img)))
        return parts

    def _evaluate(self, program: GeometryProgram) -> EvaluationOutcome:
        key = json.dumps(program.root.to_json(), sort_keys=True)
        if key not in self.eval_cache:
            self.eval_cache[key] = evaluate_program(
                program, self.case, self.config.eval_config()
            )
        outcome = self.eval_cache[key]
        self.state.validation = outcome.report
        self.state.fem = outcome.fem
        return outcome

    # -- agent steps -----------------------------------------------------

    def planner_step(self, meter: _TokenMeter) -> str:
        prompt = _fill(
            _template("planner.txt"),
            {
                "SF_MIN": f"{self.config.sf_range[0]:g}",
                "SF_MAX": f"{self.config.sf_range[1]:g}",
                "VOXEL_SIZE": f"{self.voxel_size:.6g}",
                "LOAD_CASE_JSON": self.case_json,
                "FEEDBACK_BLOCK": _feedback_block(self.planner_queue),
                "EXAMPLE_BLOCK": _template("example_case.txt"),
            },
        )
        self.planner_queue.clear()
        domain_view = render_view(
            None,
            self.case,
            ViewSpec(direction="iso", width=self.config.render_size, height=self.config.render_size),
        )
        parts = [MessagePart(text=prompt), MessagePart(image_ppm=encode_ppm(domain_view))]
        response = self._chat(ROLE_PLANNER, parts, meter)
        self.state.plan = response.text
        return response.text

    def engineer_step(self, meter: _TokenMeter) -> GeometryProgram:
        prompt = _fill(
            _template("engineer.txt"),
            {
                "PLAN": self.state.plan,
                "FEEDBACK_BLOCK": _feedback_block(self.engineer_queue),
                "VOXEL_SIZE": f"{self.voxel_size:.6g}",
                "DSL_REFERENCE": _template("dsl_reference.txt"),
            },
        )
        self.engineer_queue.clear()
        response = self._chat(ROLE_ENGINEER, [MessagePart(text=prompt)], meter)
        program, source = extract_program(response.text)
        self.state.program_source = source
        self.state.geometry = program
        return program

    def geometry_review(
        self, outcome: EvaluationOutcome, meter: _TokenMeter
    ) -> tuple[bool, str]:
        """Deterministic geometry gate plus the model's advisory text.

        The review fails whenever a deterministic check fails, regardless of
        what the model says.
        """
        tool_text = _tool_results_text(self.case, outcome)
        prompt = _fill(
            _template("geometry_review.txt"),
            {"PLAN": self.state.plan, "TOOL_RESULTS": tool_text},
        )
        parts = [MessagePart(text=prompt)] + self._render_parts(outcome)
        response = self._chat(ROLE_GEOMETRY_REVIEWER, parts, meter)
        passed = _geometry_checks_pass(outcome)
        if passed:
            return True, ""
        feedback = f"geometry checks failed:\n{tool_text}"
        advisory = response.text.strip()
        if advisory and advisory.upper() != "PASS":
            feedback += f"\nreviewer notes: {advisory}"
        return False, feedback

    def structural_review(
        self, outcome: EvaluationOutcome, meter: _TokenMeter
    ) -> tuple[bool, str]:
        """Accept iff the safety factor is inside the target range.

        With physics feedback disabled the FEA numbers are withheld from the
        prompt and the model's visual verdict decides acceptance instead.
        """
        if self.config.physics_feedback:
            fea_block = _fea_text(outcome, self.config.sf_range)
            parts_extra: list[MessagePart] = []
        else:
            fea_block = (
                "(physics tools disabled: no FEA numbers available; judge the "
                "design from the attached renders)"
            )
            parts_extra = self._render_parts(outcome)
        prompt = _fill(
            _template("structural_review.txt"),
            {
                "SF_MIN": f"{self.config.sf_range[0]:g}",
                "SF_MAX": f"{self.config.sf_range[1]:g}",
                "FEA_BLOCK": fea_block,
            },
        )
        response = self._chat(
            ROLE_STRUCTURAL_REVIEWER, [MessagePart(text=prompt)] + parts_extra, meter
        )
        if self.config.physics_feedback:
            accepted = outcome.report.fea.in_target_range
            feedback = fea_block
            advisory = response.text.strip()
            if not accepted and advisory:
                feedback += f"\nreviewer notes: {advisory}"
            return accepted, feedback
        accepted = response.text.strip().lower().startswith("accept")
        return accepted, response.text.strip()

    # -- artifacts ---------------------------------------------------------

    def _write_iteration_artifacts(self, iteration: int, outcome: EvaluationOutcome | None):
        if self.config.artifact_dir is None:
            return
        it_dir = Path(self.config.artifact_dir) / f"iter_{iteration}"
        it_dir.mkdir(parents=True, exist_ok=True)
        if self.state.program_source:
            (it_dir / "program.json").write_text(self.state.program_source)
        if outcome is not None:
            (it_dir / "validation.json").write_text(
                json.dumps(outcome.report.to_json(), indent=2)
            )
            for direction in self.config.render_views:
                img = render_view(
                    outcome.surface,
                    self.case,
                    ViewSpec(
                        direction=direction,
                        width=self.config.render_size,
                        height=self.config.render_size,
                    ),
                )
                name = direction.replace("+", "p").replace("-", "m")
                (it_dir / f"view_{name}.ppm").write_bytes(encode_ppm(img))

    def _write_transcript(self):
        if self.config.artifact_dir is None:
            return
        path = Path(self.config.artifact_dir) / "transcript.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.state.transcript, indent=2))

    # -- main loops --------------------------------------------------------

    def _iteration_record(
        self,
        index: int,
        compile_ok: bool,
        outcome: EvaluationOutcome | None,
        meter: _TokenMeter,
        wall: float,
    ) -> IterationRecord:
        fea = outcome.report.fea if outcome is not None else None
        return IterationRecord(
            iteration_index=index,
            compile_ok=compile_ok,
            mesh_ok=bool(outcome is not None and outcome.mesh_ok),
            fea_ok=bool(outcome is not None and outcome.fea_ok),
            safety_factor=fea.safety_factor if fea is not None else None,
            volume_mm3=outcome.volume_mm3 if outcome is not None else None,
            face_count=outcome.face_count if outcome is not None else None,
            design_space_violated=bool(
                outcome is not None and outcome.report.design_space.violated
            ),
            violation_ratio=(
                outcome.report.design_space.violation_ratio if outcome is not None else 0.0
            ),
            failure_category=(outcome.report.failure_category if outcome is not None else None),
            input_tokens=meter.input,
            output_tokens=meter.output,
            wall_seconds=0.0 if self.config.deterministic_timing else wall,
        )

    def run(self) -> RunRecord:
        records: list[IterationRecord] = []
        replan = True
        final_status = STATUS_ITERATION_CAP
        iterations_to_valid = None

        for iteration in range(1, self.config.max_iterations + 1):
            self.state.iteration = iteration
            meter = _TokenMeter()
            started = time.perf_counter()
            outcome = None
            compile_ok = False

            if not self.config.single_agent and (replan or iteration == 1):
                self.planner_step(meter)
                replan = False

            geometry_ok = False
            for attempt in range(1 + self.config.inner_retries):
                try:
                    if self.config.single_agent:
                        program = self._single_agent_step(meter)
                    else:
                        program = self.engineer_step(meter)
                    compile_ok = True
                except ExtractionFailed as exc:
                    compile_ok = False
                    outcome = None
                    failure = f"compile failed: {exc}"
                    self.engineer_queue.append(failure)
                    self.state.feedback.append((ROLE_GEOMETRY_REVIEWER, failure))
                    continue
                outcome = self._evaluate(program)
                if self.config.single_agent:
                    geometry_ok = _geometry_checks_pass(outcome)
                    if not geometry_ok:
                        self.engineer_queue.append(
                            f"geometry checks failed:\n{_tool_results_text(self.case, outcome)}"
                        )
                    break  # the single agent consumes raw results next turn
                passed, feedback = self.geometry_review(outcome, meter)
                geometry_ok = passed
                if passed:
                    break
                self.engineer_queue.append(feedback)
                self.state.feedback.append((ROLE_GEOMETRY_REVIEWER, feedback))

            wall = time.perf_counter() - started

            if not compile_ok or outcome is None:
                records.append(self._iteration_record(iteration, False, None, meter, wall))
                self._write_iteration_artifacts(iteration, None)
                if not self.config.single_agent:
                    self.planner_queue.append(
                        "the engineer repeatedly failed to produce a compilable "
                        "geometry program; simplify the plan"
                    )
                    replan = True
                continue

            if not geometry_ok:
                records.append(self._iteration_record(iteration, True, outcome, meter, wall))
                self._write_iteration_artifacts(iteration, outcome)
                if not self.config.single_agent:
                    # two consecutive geometry failures on one plan escalate
                    self.planner_queue.append(
                        "geometry kept failing deterministic checks under the "
                        f"current plan; last results:\n{_tool_results_text(self.case, outcome)}"
                    )
                    replan = True
                continue

            if not outcome.fea_ok:
                feedback = (
                    "FEA failed on the proposed geometry (structure is likely "
                    "under-constrained or too thin at the working resolution)"
                )
                self.engineer_queue.append(feedback)
                self.state.feedback.append((ROLE_STRUCTURAL_REVIEWER, feedback))
                records.append(self._iteration_record(iteration, True, outcome, meter, wall))
                self._write_iteration_artifacts(iteration, outcome)
                continue

            if self.config.single_agent:
                accepted = (
                    outcome.report.fea.in_target_range
                    if self.config.physics_feedback
                    else False
                )
                if self.config.physics_feedback:
                    self.engineer_queue.append(_fea_text(outcome, self.config.sf_range))
            else:
                accepted, feedback = self.structural_review(outcome, meter)
                if not accepted:
                    self.planner_queue.append(feedback)
                    self.state.feedback.append((ROLE_STRUCTURAL_REVIEWER, feedback))
                    replan = True

            wall = time.perf_counter() - started
            records.append(self._iteration_record(iteration, True, outcome, meter, wall))
            self._write_iteration_artifacts(iteration, outcome)

            if accepted and outcome.report.verdict == "valid":
                final_status = STATUS_VALID
                iterations_to_valid = iteration
                break

        if final_status != STATUS_VALID and records:
            last = records[-1]
            if last.failure_category is not None:
                final_status = status_failed(last.failure_category)

        self._write_transcript()
        return RunRecord(
            model_id=self.config.model_id,
            problem_id=self.case.problem_id,
            variant=self.config.variant,
            run_seed=self.config.run_seed,
            iterations=tuple(records),
            final_status=final_status,
            iterations_to_valid=iterations_to_valid,
        )

    def _single_agent_step(self, meter: _TokenMeter) -> GeometryProgram:
        tool_block = (
            _feedback_block(self.engineer_queue)
            if self.engineer_queue
            else "No analysis results yet: this is the first attempt."
        )
        prompt = _fill(
            _template("single_agent.txt"),
            {
                "SF_MIN": f"{self.config.sf_range[0]:g}",
                "SF_MAX": f"{self.config.sf_range[1]:g}",
                "VOXEL_SIZE": f"{self.voxel_size:.6g}",
                "LOAD_CASE_JSON": self.case_json,
                "TOOL_BLOCK": tool_block,
                "DSL_REFERENCE": _template("dsl_reference.txt"),
            },
        )
        self.engineer_queue.clear()
        last_outcome = None
        if self.state.geometry is not None:
            key = json.dumps(self.state.geometry.root.to_json(), sort_keys=True)
            last_outcome = self.eval_cache.get(key)
        parts = [MessagePart(text=prompt)] + self._render_parts(last_outcome)
        response = self._chat(ROLE_SINGLE_AGENT, parts, meter)
        program, source = extract_program(response.text)
        self.state.program_source = source
        self.state.geometry = program
        return program


def run_pipeline(case: LoadCase, backend: AgentBackend, config: LoopConfig | None = None) -> RunRecord:
    """Run the multi-agent Generate-Simulate-Refine loop on one load case."""
    config = config or LoopConfig()
    return _Orchestrator(case, backend, config).run()


def single_agent_pipeline(
    case: LoadCase, backend: AgentBackend, config: LoopConfig | None = None
) -> RunRecord:
    """Planner/reviewer ablation: one engineer fed raw tool and FEA output."""
    config = config or LoopConfig()
    config = LoopConfig(**{**config.__dict__, "single_agent": True})
    return _Orchestrator(case, backend, config).run()
