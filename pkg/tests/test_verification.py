"""
验证服务与管理命令测试

测试检查注册表、配置合并、检查调度、JSON 报告和 verify / list_identities 命令。
"""

import json
import math
import os
import tempfile
from io import StringIO

import pytest
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from pydantic import ValidationError as PydanticValidationError

from apps.verification.registry import REGISTRY, CheckSpec, all_checks, checks_for, register
from apps.verification.response import ExitCode
from apps.verification.schemas import SUITES, ResidualReport, RunConfig
from apps.verification.services import VerificationService


def write_json(data) -> str:
    """写入临时 JSON 文件并返回路径"""
    handle, path = tempfile.mkstemp(suffix='.json')
    with os.fdopen(handle, 'w', encoding='utf-8') as f:
        json.dump(data, f)
    return path


class RegistryTest(SimpleTestCase):
    """检查注册表测试类"""

    def test_registry_contents(self):
        """测试注册表包含各套件的检查"""
        self.assertGreaterEqual(len(REGISTRY), 25)
        for identity_id in ('DYBE', 'DRLL', 'MDLop', 'tt_tt0:m=1,s=1', 'newton', 'Q_Ltilde', 'sl2_SS'):
            self.assertIn(identity_id, REGISTRY)
        self.assertEqual({c.suite for c in all_checks()}, set(SUITES))

    def test_checks_sorted(self):
        """测试检查按标识排序"""
        ids = [c.identity_id for c in checks_for(['felder', 'theta'])]
        self.assertEqual(ids, sorted(ids))
        self.assertIn('theta_odd', ids)
        self.assertNotIn('DRLL', ids)

    def test_duplicate_identity(self):
        """测试重复登记报错"""
        with self.assertRaises(ValueError):
            register('DYBE', 'DYBE', 'felder')(lambda env: None)


class RunConfigTest(SimpleTestCase):
    """运行配置测试类"""

    def test_defaults_from_settings(self):
        """测试没有覆盖时取 settings.VERIFICATION"""
        config = VerificationService.load_config(config_path='')
        self.assertEqual(config.n, settings.VERIFICATION['N'])
        self.assertEqual(config.seed, settings.VERIFICATION['SEED'])
        self.assertEqual(config.selected_suites(), list(SUITES))

    def test_flags_override_file(self):
        """测试命令行参数优先于配置文件，配置文件优先于环境变量"""
        path = write_json({'n': 3, 'seed': 11, 'samples': 4})
        self.addCleanup(os.remove, path)
        config = VerificationService.load_config({'seed': 5, 'tol': None}, path)
        self.assertEqual(config.n, 3)
        self.assertEqual(config.seed, 5)
        self.assertEqual(config.samples, 4)
        self.assertEqual(config.tol, settings.VERIFICATION['TOL'])

    def test_config_path_from_settings(self):
        """测试 CONFIG_PATH 指定的配置文件"""
        path = write_json({'suites': 'theta,felder'})
        self.addCleanup(os.remove, path)
        with override_settings(VERIFICATION={**settings.VERIFICATION, 'CONFIG_PATH': path}):
            config = VerificationService.load_config()
        self.assertEqual(config.selected_suites(), ['theta', 'felder'])

    def test_unknown_file_key(self):
        """测试配置文件含未知键时报错"""
        path = write_json({'rank': 2})
        self.addCleanup(os.remove, path)
        with self.assertRaises(ValidationError):
            VerificationService.load_config(config_path=path)

    def test_missing_file(self):
        """测试配置文件不存在时报错"""
        with self.assertRaises(ValidationError):
            VerificationService.read_config_file('/nonexistent/verify.json')

    def test_unknown_suite(self):
        """测试未知套件报错"""
        with self.assertRaises(PydanticValidationError):
            RunConfig(suites='theta,quartic')

    def test_rank_range(self):
        """测试 n 超出 1..3 时报错"""
        with self.assertRaises(PydanticValidationError):
            RunConfig(n=4)

    def test_sites_string(self):
        """测试站点字符串解析"""
        config = RunConfig(sites='defining@0.1,dual@0.45')
        self.assertEqual([s.rep for s in config.sites], ['defining', 'dual'])


class VerificationRunTest(SimpleTestCase):
    """检查调度测试类"""

    def test_theta_suite_passes(self):
        """测试 theta 套件全部通过"""
        reports = VerificationService.run(RunConfig(suites='theta'))
        self.assertEqual(len(reports), len(checks_for(['theta'])))
        self.assertTrue(all(r.passed for r in reports), [r.identity_id for r in reports if not r.passed])
        self.assertEqual(ExitCode.from_reports(reports), ExitCode.OK)

    def test_unattainable_tolerance(self):
        """测试容差过小时残差非零的检查都未通过，退出码为 FAILED"""
        reports = VerificationService.run(RunConfig(suites='theta', tol=1e-30))
        self.assertTrue(all(r.status == 'ok' for r in reports))
        for report in reports:
            self.assertEqual(report.passed, report.max_rel < report.tol, report.identity_id)
            if report.max_rel > 0:
                self.assertFalse(report.passed, report.identity_id)
        self.assertTrue(any(not r.passed for r in reports))
        self.assertEqual(ExitCode.from_reports(reports), ExitCode.FAILED)

    def test_exact_zero_residual_passes_any_tolerance(self):
        """测试浮点下两侧逐项相同的检查在任意容差下都通过"""
        report = ResidualReport(identity_id='theta_odd', tol=1e-30, max_abs=0.0, max_rel=0.0)
        self.assertTrue(report.passed)

    @pytest.mark.slow
    def test_default_run_passes(self):
        """测试默认配置下全部套件通过"""
        config = VerificationService.load_config({'suites': 'all', 'n': 2, 'seed': 1}, config_path='')
        reports = VerificationService.run(config)
        self.assertEqual(len(reports), len(all_checks()))
        failed = [(r.identity_id, r.max_rel, r.message) for r in reports if not r.passed]
        self.assertEqual(failed, [])
        self.assertEqual(ExitCode.from_reports(reports), ExitCode.OK)

    def test_tolerance_scaling(self):
        """测试类别容差按 tol / 1e-9 缩放"""
        check = REGISTRY['DYBE']
        self.assertAlmostEqual(VerificationService.scaled_tol(check, RunConfig(tol=1e-8)), 1e-8)
        self.assertAlmostEqual(VerificationService.scaled_tol(REGISTRY['trig_limit'], RunConfig(tol=1e-8)), 1e-5)

    def test_seed_independent_of_order(self):
        """测试串行与并行运行给出相同结果"""
        serial = VerificationService.run(RunConfig(suites='theta', workers=1))
        parallel = VerificationService.run(RunConfig(suites='theta', workers=3))
        self.assertEqual([(r.identity_id, r.seed, r.max_rel) for r in serial],
                         [(r.identity_id, r.seed, r.max_rel) for r in parallel])

    def test_crashing_check(self):
        """测试检查抛出异常时报告 status=error"""
        def explode(env):
            raise RuntimeError('boom')
        check = CheckSpec(identity_id='explode', anchor='none', suite='theta', tol=1e-9, builder=explode)
        report = VerificationService.run_check(check, RunConfig())
        self.assertEqual(report.status, 'error')
        self.assertFalse(report.passed)
        self.assertIn('boom', report.message)

    def test_inapplicable_check(self):
        """测试零权子空间为空时报告 status=error"""
        report = VerificationService.run_check(REGISTRY['ss_ss'], RunConfig(sites='defining@0.1'))
        self.assertEqual(report.status, 'error')
        self.assertIn('零权子空间', report.message)


class ReportSerializationTest(SimpleTestCase):
    """JSON 报告测试类"""

    def test_empty_document(self):
        """测试空报告列表的文档"""
        document = json.loads(VerificationService.serialize([]))
        self.assertEqual(document['schema'], 1)
        self.assertEqual(document['reports'], [])
        self.assertEqual(document['summary'], {'passed': 0, 'failed': 0})

    def test_pass_alias_and_nan(self):
        """测试 pass 字段别名，非有限残差写成 null"""
        failed = ResidualReport.failure('DYBE', 'DYBE', 1e-9, 3, '出错')
        ok = ResidualReport(identity_id='R21R12', tol=1e-9, max_rel=1e-12, max_abs=1e-12)
        document = json.loads(VerificationService.serialize([failed, ok], RunConfig(suites='felder')))
        first, second = document['reports']
        self.assertIsNone(first['max_rel'])
        self.assertFalse(first['pass'])
        self.assertTrue(second['pass'])
        self.assertEqual(document['summary'], {'passed': 1, 'failed': 1})
        self.assertEqual(document['config']['suites'], ['felder'])

    def test_report_field_names(self):
        """测试报告字段名，公式标签写作 paper_anchor"""
        report = ResidualReport(identity_id='DYBE', anchor='DYBE', tol=1e-9, max_rel=1e-12, max_abs=1e-12)
        payload = json.loads(VerificationService.serialize([report]))['reports'][0]
        self.assertEqual(payload['paper_anchor'], 'DYBE')
        self.assertNotIn('anchor', payload)
        self.assertEqual(
            list(payload),
            ['identity_id', 'paper_anchor', 'samples_used', 'max_abs', 'max_rel', 'tol', 'pass',
             'wall_time_ms', 'seed', 'status', 'message', 'details'],
        )

    def test_nan_in_details(self):
        """测试 details 中的非有限数也写成 null"""
        report = ResidualReport(identity_id='DYBE', tol=1e-9, details={'stability': float('inf')})
        payload = json.loads(VerificationService.serialize([report]))['reports'][0]
        self.assertIsNone(payload['details']['stability'])

    def test_serialization_is_deterministic(self):
        """测试同一配置运行两次，除耗时外 JSON 文档完全相同"""
        config = RunConfig(suites='theta,felder', seed=3)
        documents = []
        for _ in range(2):
            reports = [r.model_copy(update={'wall_time_ms': 0.0}) for r in VerificationService.run(config)]
            documents.append(VerificationService.serialize(reports, config))
        self.assertEqual(documents[0], documents[1])

    def test_parse_reports(self):
        """测试从文档读回报告"""
        failed = ResidualReport.failure('DYBE', 'DYBE', 1e-9, 3, '出错')
        parsed = VerificationService.parse_reports(VerificationService.serialize([failed]))
        self.assertEqual(parsed[0].anchor, 'DYBE')
        self.assertTrue(math.isnan(parsed[0].max_rel))
        self.assertEqual(parsed[0].identity_id, 'DYBE')
        self.assertEqual(parsed[0].status, 'error')
        self.assertFalse(parsed[0].passed)


class ManagementCommandTest(SimpleTestCase):
    """管理命令测试类"""

    def test_list_identities(self):
        """测试列出全部恒等式"""
        out = StringIO()
        call_command('list_identities', stdout=out)
        output = out.getvalue()
        self.assertIn('DYBE', output)
        self.assertIn(f"共 {len(REGISTRY)} 个恒等式", output)

    def test_verify_theta(self):
        """测试 verify 运行 theta 套件并写出 JSON"""
        handle, path = tempfile.mkstemp(suffix='.json')
        os.close(handle)
        self.addCleanup(os.remove, path)
        out = StringIO()
        call_command('verify', suites='theta', output_path=path, config_path='', verbosity=0, stdout=out)
        self.assertIn('theta_odd', out.getvalue())
        with open(path, encoding='utf-8') as f:
            document = json.load(f)
        self.assertEqual(document['summary']['failed'], 0)

    @pytest.mark.slow
    def test_verify_default_run_exits_zero(self):
        """测试默认配置运行全部套件时正常退出"""
        out = StringIO()
        try:
            call_command('verify', config_path='', verbosity=0, stdout=out, stderr=StringIO())
        except SystemExit as e:
            self.fail(f"verify 以 {e.code} 退出: {out.getvalue()}")

    def test_verify_failure_exit_code(self):
        """测试存在未通过检查时以 1 退出"""
        with self.assertRaises(SystemExit) as cm:
            call_command('verify', suites='theta', tol=1e-30, config_path='', verbosity=0,
                         stdout=StringIO(), stderr=StringIO())
        self.assertEqual(cm.exception.code, ExitCode.FAILED)

    def test_verify_invalid_arguments(self):
        """测试无效参数给出 USAGE 退出码"""
        with self.assertRaises(CommandError) as cm:
            call_command('verify', n=5, config_path='', verbosity=0, stdout=StringIO())
        self.assertEqual(cm.exception.returncode, ExitCode.USAGE)

    def test_verify_unknown_suite(self):
        """测试未知套件报错"""
        with self.assertRaises(CommandError):
            call_command('verify', suites='quartic', config_path='', verbosity=0, stdout=StringIO())


class ExitCodeTest(SimpleTestCase):
    """退出码测试类"""

    def test_values_and_labels(self):
        """测试退出码的取值和标签"""
        self.assertEqual([int(c) for c in ExitCode], [0, 1, 2])
        self.assertEqual(ExitCode.USAGE.label, '参数错误')

    def test_from_reports(self):
        """测试空报告列表视为全部通过"""
        self.assertEqual(ExitCode.from_reports([]), ExitCode.OK)
        failed = ResidualReport.failure('DYBE', 'DYBE', 1e-9, 3, '出错')
        self.assertEqual(ExitCode.from_reports([failed]), ExitCode.FAILED)
