"""
list_identities 命令

列出全部已登记的恒等式及其公式标签。
"""

from django.core.management.base import BaseCommand

from apps.verification.services import VerificationService


class Command(BaseCommand):
    help = '列出全部恒等式标识、公式标签和所属套件'

    def handle(self, *args, **options):
        identities = VerificationService.list_identities()
        for identity_id, anchor, suite in identities:
            self.stdout.write(f"{identity_id:<28} {anchor:<18} {suite}")
        self.stdout.write(f"共 {len(identities)} 个恒等式")
