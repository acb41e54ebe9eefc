"""
恒等式检查注册表

每个检查登记标识、公式标签、所属套件、容差类别和构造函数。
构造函数接收 CheckEnv，返回 ResidualReport。
"""

from typing import Callable, Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from apps.felder.schemas import RMatrixSpec
from apps.felder.services import FelderService
from apps.gaudin.operators import ClassicalLOperator
from apps.gaudin.schemas import GaudinSiteSpec
from apps.gaudin.services import GaudinService
from apps.lops.operators import DynamicalLOperator
from apps.lops.services import LOperatorService
from apps.scalar.context import EngineContext
from apps.scalar.expressions import Const, Var, X, neg, theta
from apps.scalar.schemas import SamplingPolicy
from apps.scalar.services import ScalarService
from apps.theta.services import ThetaService
from apps.verification.schemas import ResidualReport

# 容差类别
TOL_ELLIPTIC = 1e-9
TOL_OPAQUE = 1e-8
TOL_LIMIT = 1e-5

# 量子 L 算子的站点求值点
QUANTUM_POINTS = (0.1, 0.45)


class CheckEnv(BaseModel):
    """单个检查的运行环境，tol 已按配置缩放"""
    model_config = ConfigDict(frozen=True)

    ctx: EngineContext = Field(..., description='引擎上下文')
    sampling: SamplingPolicy = Field(..., description='采样策略')
    tol: float = Field(..., gt=0, description='缩放后的容差')
    sites: Tuple[GaudinSiteSpec, ...] = Field((), description='Gaudin 站点')

    @property
    def n(self) -> int:
        return self.ctx.n


class CheckSpec(BaseModel):
    """检查描述"""
    model_config = ConfigDict(frozen=True)

    identity_id: str = Field(..., description='恒等式标识')
    anchor: str = Field(..., description='对应的公式标签')
    suite: str = Field(..., description='所属套件')
    tol: float = Field(..., gt=0, description='类别容差')
    builder: Callable[[CheckEnv], ResidualReport] = Field(..., description='构造残差报告的函数')


REGISTRY: Dict[str, CheckSpec] = {}


def register(identity_id: str, anchor: str, suite: str, tol: float = TOL_ELLIPTIC):
    """登记检查的装饰器，标识重复时抛出 ValueError"""
    def decorator(builder):
        if identity_id in REGISTRY:
            raise ValueError(f"检查标识重复: {identity_id}")
        REGISTRY[identity_id] = CheckSpec(identity_id=identity_id, anchor=anchor, suite=suite, tol=tol, builder=builder)
        return builder
    return decorator


def checks_for(suites: Sequence[str]) -> List[CheckSpec]:
    """所列套件的检查，按标识排序"""
    return sorted((c for c in REGISTRY.values() if c.suite in suites), key=lambda c: c.identity_id)


def all_checks() -> List[CheckSpec]:
    return sorted(REGISTRY.values(), key=lambda c: c.identity_id)


def _spec(env: CheckEnv) -> RMatrixSpec:
    return RMatrixSpec(n=env.n)


def _single_site(env: CheckEnv, role: str = 'second_space') -> DynamicalLOperator:
    return LOperatorService.lop_from_R(env.ctx, QUANTUM_POINTS[0], role)


def _fused(env: CheckEnv) -> DynamicalLOperator:
    return LOperatorService.lop_from_sites(env.ctx, QUANTUM_POINTS)


def _gaudin(env: CheckEnv, traceless: bool = False) -> ClassicalLOperator:
    return GaudinService.gaudin_L(env.n, env.sites, traceless)


def _sl2(env: CheckEnv) -> ClassicalLOperator:
    sites = [GaudinSiteSpec(rep='defining', eval_point=s.eval_point) for s in env.sites]
    return GaudinService.gaudin_L(2, sites, traceless=True)


# theta

@register('theta_quasi_periodicity', 'theta_tau', 'theta', 1e-10)
def _theta_quasi_periodicity(env: CheckEnv):
    return ThetaService.theta_quasi_periodicity_residual(env.sampling.samples, env.ctx.theta,
                                                         env.sampling.seed, env.tol)


@register('theta_odd', 'theta_odd', 'theta', 1e-10)
def _theta_odd(env: CheckEnv):
    x = Var(X)
    return ScalarService.expr_equal_numeric(theta(neg(x)), neg(theta(x)), env.sampling, env.ctx, env.tol,
                                            'theta_odd', 'theta_odd')


@register('theta_periodic', 'theta_one', 'theta', 1e-10)
def _theta_periodic(env: CheckEnv):
    x = Var(X)
    return ScalarService.expr_equal_numeric(theta(x + Const(1)), neg(theta(x)), env.sampling, env.ctx, env.tol,
                                            'theta_periodic', 'theta_one')


@register('theta_normalization', 'theta_prime_zero', 'theta', 1e-10)
def _theta_normalization(env: CheckEnv):
    return ScalarService.expr_equal_numeric(theta(Const(0), order=1), Const(1), env.sampling, env.ctx, env.tol,
                                            'theta_normalization', 'theta_prime_zero', variables=[X])


# felder

@register('DYBE', 'DYBE', 'felder')
def _dybe(env: CheckEnv):
    return FelderService.dybe_residual(_spec(env), env.ctx, env.sampling, env.tol)


@register('R21R12', 'R21R12', 'felder')
def _unitarity(env: CheckEnv):
    return FelderService.unitarity_residual(_spec(env), env.ctx, env.sampling, env.tol)


@register('EER_REE', 'EER_REE', 'felder', 1e-10)
def _weight_zero(env: CheckEnv):
    return FelderService.weight_zero_residual(_spec(env), env.ctx, env.sampling, env.tol)


@register('DR_RD', 'DR_RD', 'felder')
def _dcommute(env: CheckEnv):
    return FelderService.dcommute_residual(_spec(env), env.ctx, env.sampling, env.tol)


@register('R_mhbar', 'R_mhbar', 'felder', 1e-10)
def _r_minus_hbar(env: CheckEnv):
    return FelderService.r_minus_hbar_residual(_spec(env), env.ctx, env.sampling, env.tol)


@register('classical_limit_R', 'cderm', 'felder', TOL_LIMIT)
def _classical_limit_r(env: CheckEnv):
    return FelderService.classical_limit_residual(env.n, env.ctx, env.sampling, tol=env.tol)


@register('r_invariant', 'cderm', 'felder')
def _r_invariant(env: CheckEnv):
    return FelderService.r_symmetric_part_residual(env.n, env.ctx, env.sampling, env.tol)


@register('CDYBE', 'CDYBE', 'felder')
def _cdybe(env: CheckEnv):
    return FelderService.cdybe_residual(env.n, env.ctx, env.sampling, env.tol)


@register('cdtwist', 'lem_cdtwist', 'felder')
def _cdtwist(env: CheckEnv):
    return FelderService.classical_twist_residuals(env.n, env.ctx, env.sampling, env.tol)


# trig

@register('trig_limit', 'RtrigD', 'trig', 1e-6)
def _trig_limit(env: CheckEnv):
    return FelderService.trig_limit_residual(env.n, env.ctx, env.sampling, tol=env.tol)


@register('nondynamical_limit', 'Rtrig', 'trig', 1e-4)
def _nondynamical_limit(env: CheckEnv):
    return FelderService.nondynamical_limit_residual(env.n, env.ctx, env.sampling, tol=env.tol)


@register('Rtildetrig', 'Rtildetrig', 'trig', 1e-12)
def _twist_conjugation(env: CheckEnv):
    return FelderService.twist_conjugation_residual(env.n, env.ctx, env.sampling, env.tol)


@register('trig_manin', 'Rtrig', 'trig')
def _trig_manin(env: CheckEnv):
    return FelderService.trig_manin_residuals(env.n, env.ctx, env.sampling, tol=env.tol)


# manin

@register('DRLL', 'DRLL', 'manin')
def _drll(env: CheckEnv):
    return LOperatorService.rll_residual(_single_site(env), env.ctx, env.sampling, env.tol)


@register('DRLL_fused', 'DRLL', 'manin')
def _drll_fused(env: CheckEnv):
    return LOperatorService.rll_residual(_fused(env), env.ctx, env.sampling, env.tol, identity_id='DRLL_fused')


@register('RLLSym', 'RLLSym', 'manin')
def _rll_sym(env: CheckEnv):
    return LOperatorService.rll_sym_residual(_single_site(env), env.ctx, env.sampling, env.tol)


@register('EhL_LEh', 'EhL_LEh', 'manin', 1e-10)
def _ehl(env: CheckEnv):
    return LOperatorService.ehl_residual(_fused(env), env.ctx, env.sampling, env.tol)


@register('MDLop', 'MDLop', 'manin')
def _manin_single(env: CheckEnv):
    return LOperatorService.manin_residual(_single_site(env), env.ctx, env.sampling, env.tol)


@register('MDLop_fused', 'MDLop', 'manin')
def _manin_fused(env: CheckEnv):
    return LOperatorService.manin_residual(_fused(env), env.ctx, env.sampling, env.tol, identity_id='MDLop_fused')


@register('MDLop_inverse_R', 'MDLop', 'manin')
def _manin_inverse_r(env: CheckEnv):
    return LOperatorService.manin_residual(_single_site(env, 'inverse'), env.ctx, env.sampling, env.tol,
                                           identity_id='MDLop_inverse_R')


@register('MDLopIn', 'MDLopIn', 'manin')
def _manin_inverse(env: CheckEnv):
    return LOperatorService.inverse_manin_residuals(_single_site(env), env.ctx, env.sampling, env.tol)


@register('RprRi_RprRj:m=2,N=4', 'RprRj', 'manin')
def _ordering(env: CheckEnv):
    return LOperatorService.ordering_residual(env.ctx, env.sampling, 2, 4, tol=env.tol)


@register('ALLL_ALLLA:m=0,N=2', 'ALLL_ALLLA', 'manin')
def _staircase_sandwich(env: CheckEnv):
    return LOperatorService.staircase_sandwich_residual(_single_site(env), env.ctx, env.sampling, 0, 2, env.tol)


@register('ALLL_ALLLA:m=2,N=4', 'ALLL_ALLLA', 'manin')
def _staircase_sandwich_four(env: CheckEnv):
    return LOperatorService.staircase_sandwich_residual(_single_site(env), env.ctx, env.sampling, 2, 4, env.tol)


@register('AR_ARA:m=1,N=3', 'AR_ARA_m', 'manin')
def _fused_r_sandwich(env: CheckEnv):
    return LOperatorService.fused_R_sandwich_residual(env.ctx, env.sampling, 1, 3, tol=env.tol)


@register('AR_ARA:m=2,N=4', 'AR_ARA_m', 'manin')
def _fused_r_sandwich_four(env: CheckEnv):
    return LOperatorService.fused_R_sandwich_residual(env.ctx, env.sampling, 2, 4, tol=env.tol)


@register('det_trA', 'det_trA', 'manin')
def _det_tr(env: CheckEnv):
    return LOperatorService.det_tr_residual(_single_site(env), env.ctx, env.sampling, env.tol)


# commfam

@register('det_gener', 'det_gener', 'commfam', TOL_OPAQUE)
def _char_poly(env: CheckEnv):
    return LOperatorService.char_poly_residual(_single_site(env), env.ctx, env.sampling, env.tol)


@register('ht_th', 'ht_th', 'commfam', 1e-10)
def _cartan_trace(env: CheckEnv):
    return LOperatorService.cartan_trace_residual(_single_site(env), env.ctx, env.sampling, env.tol)


@register('DReLLeLL:m=1,N=2', 'DReLLeLL', 'commfam')
def _fused_rll(env: CheckEnv):
    return LOperatorService.fused_rll_residual(_single_site(env), env.ctx, env.sampling, 1, 2, env.tol)


def _register_trace_exchange(m: int, s: int):
    identity_id = f'tt_tt0:m={m},s={s}'

    @register(identity_id, 'tt_tt0', 'commfam', TOL_OPAQUE)
    def _trace_exchange(env: CheckEnv):
        return LOperatorService.trace_exchange_residual(_single_site(env), env.ctx, env.sampling, m, s, env.tol,
                                                        identity_id)


for _m, _s in ((1, 1), (1, 2), (2, 1)):
    _register_trace_exchange(_m, _s)


# newton

@register('newton', 'newton', 'newton')
def _newton(env: CheckEnv):
    return LOperatorService.newton_residual(_single_site(env), env.ctx, env.sampling, tol=env.tol)


@register('quantum_power:k=3', 'quantum_powers', 'newton')
def _quantum_power(env: CheckEnv):
    return LOperatorService.quantum_power_residual(_single_site(env), env.ctx, env.sampling, 3, env.tol,
                                                   'quantum_power:k=3')


@register('newton_G', 'newton_G', 'newton', TOL_OPAQUE)
def _classical_newton(env: CheckEnv):
    return GaudinService.classical_newton_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('classical_quantum_powers', 'quantum_powers_G', 'newton')
def _classical_powers(env: CheckEnv):
    return GaudinService.quantum_power_recursion_residual(_gaudin(env), env.ctx, env.sampling, tol=env.tol)


@register('traced_powers', 'quantum_powers_G', 'newton', TOL_OPAQUE)
def _traced_powers(env: CheckEnv):
    return GaudinService.traced_power_commutativity(_gaudin(env), env.ctx, env.sampling, tol=env.tol)


@register('trace_L_D_squared', 'quantum_powers_G', 'newton', TOL_OPAQUE)
def _second_power(env: CheckEnv):
    return GaudinService.second_power_commutativity(_gaudin(env), env.ctx, env.sampling, env.tol)


# gaudin

@register('DrLL', 'DrLL', 'gaudin')
def _gaudin_drll(env: CheckEnv):
    return GaudinService.drll_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('EhL_LEh_G', 'EhL_LEh_G', 'gaudin', 1e-10)
def _gaudin_ehl(env: CheckEnv):
    return GaudinService.ehl_classical_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('classical_manin', 'chpolGaudin', 'gaudin')
def _gaudin_manin(env: CheckEnv):
    return GaudinService.manin_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('classical_limit_L', 'LqLc', 'gaudin', TOL_LIMIT)
def _gaudin_limit(env: CheckEnv):
    return GaudinService.classical_limit_residual(env.ctx, env.sampling, QUANTUM_POINTS[:1], tol=env.tol)


@register('half_current_residue', 'hc_eij_N', 'gaudin', 1e-6)
def _gaudin_residue(env: CheckEnv):
    return GaudinService.residue_residual(_gaudin(env), env.ctx, env.sampling, tol=env.tol)


@register('hs_sh', 'hs_sh', 'gaudin', 1e-10)
def _gaudin_cartan(env: CheckEnv):
    return GaudinService.cartan_residual_s(_gaudin(env), env.ctx, env.sampling, tol=env.tol)


@register('weight_blocks', 'hs_sh', 'gaudin', 1e-10)
def _gaudin_blocks(env: CheckEnv):
    return GaudinService.weight_block_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('ss_ss', 'ss_ss', 'gaudin', TOL_OPAQUE)
def _gaudin_commutativity(env: CheckEnv):
    return GaudinService.commutativity_on_zero_weight(_gaudin(env), env.ctx, env.sampling, tol=env.tol)


@register('ss_ss_traceless', 'ss_ss', 'gaudin', TOL_OPAQUE)
def _gaudin_commutativity_traceless(env: CheckEnv):
    return GaudinService.commutativity_on_zero_weight(_gaudin(env, traceless=True), env.ctx, env.sampling,
                                                      tol=env.tol, identity_id='ss_ss_traceless')


@register('Q_Ltilde', 'Q_Ltilde', 'gaudin', TOL_OPAQUE)
def _gaudin_twist(env: CheckEnv):
    return GaudinService.twisted_gaudin_residual(_gaudin(env), env.ctx, env.sampling, env.tol)


@register('Q_Ltilde_mod_h', 'Q_Ltilde', 'gaudin', TOL_OPAQUE)
def _gaudin_twist_uncorrected(env: CheckEnv):
    # 修正项只在 n ≤ 2 时可以省略
    l = GaudinService.gaudin_L(min(env.n, 2), env.sites)
    return GaudinService.uncorrected_twist_residual(l, env.ctx, env.sampling, env.tol)


# sl2

@register('sl2_forms', 'sl2_S', 'sl2')
def _sl2_forms(env: CheckEnv):
    return GaudinService.sl2_forms_residual(_sl2(env), env.ctx, env.sampling, env.tol)


@register('sl2_SS', 'sl2_S', 'sl2', TOL_OPAQUE)
def _sl2_commutator(env: CheckEnv):
    return GaudinService.sl2_commutator_residual(_sl2(env), env.ctx, env.sampling, env.tol)


@register('sl2_crosscheck', 'sl2_det', 'sl2', TOL_OPAQUE)
def _sl2_crosscheck(env: CheckEnv):
    return GaudinService.sl2_crosscheck(_sl2(env), env.ctx, env.sampling, env.tol)
