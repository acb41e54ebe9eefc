"""
经典 Gaudin L 算子

ClassicalLOperator 由若干求值表示站点构造 𝓛(u;λ)：非对角元为半流 e⁺_ji，
对角元为 e⁺_ii 加上 Σ_{k≠i} θ'(λ_ik)/θ(λ_ik) h_k。所有算子都是 diff 型。
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from django.core.exceptions import ValidationError

from apps.felder.builders import lam_diff, unit
from apps.gaudin.schemas import GaudinSiteSpec
from apps.opalg.coefficients import MatrixExpr, msum, tensor
from apps.opalg.operators import OperatorElem
from apps.opalg.services import OperatorService
from apps.opalg.spaces import Leg, Space
from apps.scalar.expressions import Const, ScalarExpr, U, Var, VarId, theta, theta_ratio

# 配置日志
logger = logging.getLogger(__name__)

# 辅助腿标签，与动力学 L 算子一致
AUX = 'a'


def site_label(k: int) -> str:
    """第 k 个站点的腿标签，k 从 1 开始"""
    return f's{k}'


def site_space(n: int, sites: Sequence[GaudinSiteSpec], traceless: bool = False) -> Space:
    """站点的张量积"""
    legs = []
    for k, site in enumerate(sites, start=1):
        factory = Leg.defining if site.rep == 'defining' else Leg.dual
        legs.append(factory(site_label(k), n, eval_point=complex(site.eval_point), traceless=traceless))
    return Space(legs)


def representation(rep: str, n: int, i: int, j: int, traceless: bool = False) -> np.ndarray:
    """
    站点上 e_ij 的像

    定义表示 e_ij ↦ E_ij，对偶表示 e_ij ↦ −E_ji；traceless 时对角元减去 (1/n)Σ_l e_ll 的像。
    """
    if rep == 'defining':
        matrix = unit(n, i, j)
    elif rep == 'dual':
        matrix = -unit(n, j, i)
    else:
        raise ValidationError(f"未知的站点表示: {rep}")
    if traceless and i == j:
        sign = 1 if rep == 'defining' else -1
        matrix = matrix - sign * np.eye(n, dtype=complex) / n
    return matrix


class ClassicalLOperator:
    """
    经典动力学椭圆 L 算子 𝓛(u;λ)

    Attributes:
        n: 秩
        sites: 站点描述
        traceless: 是否做无迹投影
        quantum: 站点张量积
        space: 辅助腿与量子空间的张量积
    """

    def __init__(self, n: int, sites: Sequence[GaudinSiteSpec] = (), traceless: bool = False):
        if n < 1:
            raise ValidationError(f"秩必须为正: {n}")
        points = [complex(site.eval_point) for site in sites]
        if len(set(points)) != len(points):
            raise ValidationError(f"站点求值点必须互不相同: {points}")
        self.n = n
        self.sites = list(sites)
        self.traceless = traceless
        self.quantum = site_space(n, self.sites, traceless)
        self.space = Space([Leg.aux(AUX, n)]).concat(self.quantum)
        self._cache: Dict[VarId, MatrixExpr] = {}

    def __repr__(self):
        sites = ','.join(site.label() for site in self.sites)
        return f"ClassicalLOperator(n={self.n}, sites=[{sites}], traceless={self.traceless})"

    @property
    def site_labels(self) -> List[str]:
        return list(self.quantum.labels)

    def site_matrix(self, k: int, i: int, j: int, target: Optional[Space] = None) -> np.ndarray:
        """第 k 个站点（从 0 开始）上 e_ij 的像，嵌入 target（默认量子空间）"""
        target = self.quantum if target is None else target
        matrix = representation(self.sites[k].rep, self.n, i, j, self.traceless)
        return target.embed(matrix, [site_label(k + 1)])

    def cartan(self, k: int, target: Optional[Space] = None) -> np.ndarray:
        """h_k = Σ_sites Π(e_kk)，k 从 0 开始"""
        target = self.quantum if target is None else target
        return target.cartan(k, self.site_labels)

    def current_kernel(self, k: int, i: int, j: int, var: VarId = U,
                       lij: Optional[ScalarExpr] = None) -> ScalarExpr:
        """
        第 k 个站点对 e⁺_ij 的贡献系数

        i = j 时为 θ'(u−v_k)/θ(u−v_k)，否则为 θ(u−v_k+λ_ij)/(θ(u−v_k)θ(λ_ij))；
        lij 缺省时取 λ_i − λ_j。
        """
        x = Var(var) - Const(complex(self.sites[k].eval_point))
        if i == j:
            return theta_ratio(x)
        lij = lam_diff(i, j) if lij is None else lij
        return theta(x + lij) / (theta(x) * theta(lij))

    def half_current(self, i: int, j: int, var: VarId = U, target: Optional[Space] = None,
                     lij: Optional[ScalarExpr] = None) -> MatrixExpr:
        """半流 e⁺_ij(u;λ) = Σ_k kernel_k Π_k(e_ij)，没有站点时为零"""
        target = self.quantum if target is None else target
        terms = [
            tensor(self.current_kernel(k, i, j, var, lij), self.site_matrix(k, i, j, target), target.dims)
            for k in range(len(self.sites))
        ]
        return msum(terms, target.dims)

    def coefficient(self, var: VarId = U) -> MatrixExpr:
        """𝓛(var;λ) 作为辅助腿与量子空间上的系数"""
        coef = self._cache.get(var)
        if coef is None:
            space = self.space
            terms = []
            for i in range(self.n):
                for j in range(self.n):
                    aux = space.elementary(AUX, i, j)
                    for k in range(len(self.sites)):
                        matrix = aux @ self.site_matrix(k, j, i, space)
                        terms.append(tensor(self.current_kernel(k, j, i, var), matrix, space.dims))
                for k in range(self.n):
                    if k != i:
                        matrix = space.elementary(AUX, i, i) @ self.cartan(k, space)
                        terms.append(tensor(theta_ratio(lam_diff(i, k)), matrix, space.dims))
            coef = msum(terms, space.dims)
            self._cache[var] = coef
        return coef

    def operator(self, var: VarId = U) -> OperatorElem:
        """𝓛(var;λ) 作为 diff 型算子"""
        return OperatorElem.from_coefficient(self.space, self.coefficient(var), 'diff')

    def l_d(self, var: VarId = U) -> OperatorElem:
        """𝓛_D(u) = 𝓛(u;λ) − D̂_λ"""
        return self.operator(var) - OperatorService.d_hat(self.space, AUX)

    def manin(self, var: VarId = U) -> OperatorElem:
        """𝓜 = ∂_u − D̂_λ + 𝓛(u;λ)"""
        return OperatorElem.diff_op(self.space, var) + self.l_d(var)
