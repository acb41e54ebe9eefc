"""
验证业务逻辑服务

合并运行配置、调度已登记的检查、汇总并序列化残差报告。
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from django.conf import settings
from django.core.exceptions import ValidationError

from apps.scalar.context import EngineContext
from apps.scalar.schemas import SamplingPolicy
from apps.verification.registry import CheckEnv, CheckSpec, all_checks, checks_for
from apps.verification.schemas import ResidualReport, RunConfig
from utils.exceptions import EngineError, InapplicableCheckError
from utils.helpers import derive_seed, format_complex

# 配置日志
logger = logging.getLogger(__name__)

# JSON 报告格式版本
SCHEMA_VERSION = 1

# 容差类别以此为基准缩放
BASE_TOL = 1e-9

# 配置文件和命令行可以覆盖的键
CONFIG_KEYS = ('n', 'suites', 'tau', 'hbar', 'seed', 'tol', 'samples', 'sites', 'workers', 'output_path')


class VerificationService:
    """
    验证服务类

    提供配置合并、检查调度和报告序列化。
    """

    @staticmethod
    def default_config_values() -> Dict[str, Any]:
        """由环境变量和默认值构成的配置"""
        options = settings.VERIFICATION
        return {
            'n': options['N'],
            'tau': options['TAU'],
            'hbar': options['HBAR'],
            'seed': options['SEED'],
            'tol': options['TOL'],
            'samples': options['SAMPLES'],
            'sites': options['SITES'],
            'workers': options['WORKERS'],
        }

    @staticmethod
    def read_config_file(path: str) -> Dict[str, Any]:
        """
        读取 JSON 配置文件

        Raises:
            ValidationError: 文件不存在、格式错误或含未知键时抛出
        """
        file = Path(path)
        if not file.is_file():
            raise ValidationError(f"配置文件不存在: {path}")
        try:
            data = json.loads(file.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ValidationError(f"配置文件不是合法的 JSON: {path} ({e})")
        if not isinstance(data, dict):
            raise ValidationError(f"配置文件顶层必须是对象: {path}")
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise ValidationError(f"配置文件含未知键: {', '.join(unknown)}")
        return data

    @staticmethod
    def load_config(overrides: Optional[Dict[str, Any]] = None, config_path: Optional[str] = None) -> RunConfig:
        """
        合并运行配置

        优先级：overrides（命令行参数）> JSON 配置文件 > 环境变量 > 默认值。
        overrides 中值为 None 的键视为未给出。

        Args:
            overrides: 命令行给出的配置
            config_path: JSON 配置文件路径，默认取 VERIFICATION['CONFIG_PATH']

        Returns:
            RunConfig: 合并后的配置

        Raises:
            ValidationError: 配置文件无效时抛出
            pydantic.ValidationError: 配置值无效时抛出
        """
        values = VerificationService.default_config_values()
        path = settings.VERIFICATION['CONFIG_PATH'] if config_path is None else config_path
        if path:
            values.update(VerificationService.read_config_file(path))
            logger.debug(f"已读取配置文件: {path}")
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return RunConfig(**values)

    @staticmethod
    def scaled_tol(check: CheckSpec, config: RunConfig) -> float:
        """按配置的 tol 缩放检查的类别容差"""
        return check.tol * (config.tol / BASE_TOL)

    @staticmethod
    def run_check(check: CheckSpec, config: RunConfig) -> ResidualReport:
        """
        执行单个检查

        检查抛出的任何异常都转换为 status="error" 的报告。
        """
        seed = derive_seed(config.seed, check.identity_id)
        tol = VerificationService.scaled_tol(check, config)
        started = time.perf_counter()
        try:
            ctx = EngineContext.from_settings(n=config.n, tau=config.tau, hbar=config.hbar)
            sampling = SamplingPolicy.from_settings(samples=config.samples, seed=seed)
            env = CheckEnv(ctx=ctx, sampling=sampling, tol=tol, sites=tuple(config.sites))
            report = check.builder(env)
        except InapplicableCheckError as e:
            logger.warning(f"检查不适用: {check.identity_id} - {e}")
            return ResidualReport.failure(check.identity_id, check.anchor, tol, seed, str(e),
                                          (time.perf_counter() - started) * 1000)
        except (EngineError, ValidationError) as e:
            logger.error(f"检查出错: {check.identity_id} - {e}")
            return ResidualReport.failure(check.identity_id, check.anchor, tol, seed, str(e),
                                          (time.perf_counter() - started) * 1000)
        except Exception as e:
            logger.exception(f"检查崩溃: {check.identity_id}")
            return ResidualReport.failure(check.identity_id, check.anchor, tol, seed,
                                          f"{type(e).__name__}: {e}",
                                          (time.perf_counter() - started) * 1000)

        report = report.model_copy(update={
            'identity_id': check.identity_id,
            'anchor': check.anchor,
            'seed': seed,
        })
        if report.passed:
            logger.info(f"检查通过: {check.identity_id} max_rel={report.max_rel:.3e} tol={tol:.1e}")
        else:
            logger.warning(f"检查未通过: {check.identity_id} max_rel={report.max_rel:.3e} tol={tol:.1e}")
        return report

    @staticmethod
    def run(config: RunConfig) -> List[ResidualReport]:
        """
        执行所选套件的全部检查

        检查之间互相独立，workers > 1 时用线程池并行；报告按 identity_id 排序。

        Args:
            config: 运行配置

        Returns:
            list: 残差报告
        """
        checks = checks_for(config.selected_suites())
        logger.info(f"开始验证: {len(checks)} 个检查, 套件={','.join(config.selected_suites())}, "
                    f"n={config.n}, seed={config.seed}")

        if config.workers > 1 and len(checks) > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                reports = list(pool.map(lambda c: VerificationService.run_check(c, config), checks))
        else:
            reports = [VerificationService.run_check(c, config) for c in checks]

        reports.sort(key=lambda r: r.identity_id)
        summary = VerificationService.summarize(reports)
        logger.info(f"验证结束: 通过 {summary['passed']}, 未通过 {summary['failed']}")
        return reports

    @staticmethod
    def summarize(reports: Sequence[ResidualReport]) -> Dict[str, int]:
        passed = sum(1 for r in reports if r.passed)
        return {'passed': passed, 'failed': len(reports) - passed}

    @staticmethod
    def config_payload(config: RunConfig) -> Dict[str, Any]:
        """配置的 JSON 表示，复数写成可回读的字面量"""
        return {
            'n': config.n,
            'suites': config.selected_suites(),
            'tau': format_complex(config.tau),
            'hbar': format_complex(config.hbar),
            'seed': config.seed,
            'tol': config.tol,
            'samples': config.samples,
            'sites': ','.join(site.label() for site in config.sites),
            'workers': config.workers,
        }

    @staticmethod
    def report_payload(report: ResidualReport) -> Dict[str, Any]:
        """单个报告的 JSON 表示，字段名取别名，非有限数写成 null"""
        return json.loads(report.model_dump_json(by_alias=True))

    @staticmethod
    def serialize(reports: Sequence[ResidualReport], config: Optional[RunConfig] = None) -> str:
        """
        生成 JSON 报告文档

        Returns:
            str: {"schema", "config", "reports", "summary"} 文档
        """
        document = {
            'schema': SCHEMA_VERSION,
            'config': VerificationService.config_payload(config) if config is not None else {},
            'reports': [VerificationService.report_payload(r) for r in reports],
            'summary': VerificationService.summarize(reports),
        }
        return json.dumps(document, ensure_ascii=False, indent=2, allow_nan=False)

    @staticmethod
    def parse_reports(text: str) -> List[ResidualReport]:
        """从 JSON 报告文档读回报告"""
        return [ResidualReport.model_validate(item) for item in json.loads(text)['reports']]

    @staticmethod
    def list_identities() -> List[Tuple[str, str, str]]:
        """全部已登记检查的 (identity_id, anchor, suite)，按标识排序"""
        return [(c.identity_id, c.anchor, c.suite) for c in all_checks()]
