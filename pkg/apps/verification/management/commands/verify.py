"""
verify 命令

执行所选验证套件并输出残差报告。

示例:
    python manage.py verify --suites all --n 2 --tau 0+1.1i --hbar 0.137+0.071i \
        --seed 1 --tol 1e-9 --samples 8 --sites defining@0.1,dual@0.45 --json out.json
"""

import logging
import sys
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError as PydanticValidationError

from apps.verification.response import ExitCode
from apps.verification.services import VerificationService

# --verbosity 到 apps 日志级别
VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.INFO, 3: logging.DEBUG}


class Command(BaseCommand):
    help = '在随机复参数上验证椭圆动力学 R 矩阵、Manin 矩阵与 Gaudin 模型的恒等式'

    def add_arguments(self, parser):
        parser.add_argument('--suites', help='逗号分隔的套件: theta,felder,manin,commfam,gaudin,sl2,trig,newton,all')
        parser.add_argument('--n', type=int, help='秩 n (1..3)')
        parser.add_argument('--tau', help='模参数 τ，如 0+1.1i')
        parser.add_argument('--hbar', help='量子参数 ħ，如 0.137+0.071i')
        parser.add_argument('--seed', type=int, help='随机种子')
        parser.add_argument('--tol', type=float, help='基准容差，按比例缩放各检查的类别容差')
        parser.add_argument('--samples', type=int, help='每个恒等式的采样点数')
        parser.add_argument('--sites', help='Gaudin 站点，如 defining@0.1,dual@0.45')
        parser.add_argument('--workers', type=int, help='并行线程数')
        parser.add_argument('--json', dest='output_path', help='JSON 报告输出路径')
        parser.add_argument('--config', dest='config_path', help='JSON 配置文件，默认取 VERIFY_CONFIG_PATH')

    def handle(self, *args, **options):
        logging.getLogger('apps').setLevel(VERBOSITY_LEVELS.get(options['verbosity'], logging.INFO))

        overrides = {
            key: options.get(key)
            for key in ('suites', 'n', 'tau', 'hbar', 'seed', 'tol', 'samples', 'sites', 'workers', 'output_path')
        }
        try:
            config = VerificationService.load_config(overrides, options.get('config_path'))
        except ValidationError as e:
            raise CommandError('; '.join(e.messages), returncode=ExitCode.USAGE)
        except PydanticValidationError as e:
            messages = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
            raise CommandError('配置无效: ' + '; '.join(messages), returncode=ExitCode.USAGE)

        reports = VerificationService.run(config)
        document = VerificationService.serialize(reports, config)

        for report in reports:
            if report.passed:
                line = self.style.SUCCESS(f"✅ {report.identity_id:<28} max_rel={report.max_rel:.3e} tol={report.tol:.1e}")
            elif report.status == 'error':
                line = self.style.ERROR(f"💥 {report.identity_id:<28} {report.message}")
            else:
                line = self.style.WARNING(f"❌ {report.identity_id:<28} max_rel={report.max_rel:.3e} tol={report.tol:.1e}")
            self.stdout.write(line)

        summary = VerificationService.summarize(reports)
        self.stdout.write(f"通过 {summary['passed']}，未通过 {summary['failed']}")

        if config.output_path:
            Path(config.output_path).write_text(document + '\n', encoding='utf-8')
            self.stdout.write(f"报告已写入: {config.output_path}")

        code = ExitCode.from_reports(reports)
        if code != ExitCode.OK:
            self.stderr.write(code.label)
            sys.exit(int(code))
