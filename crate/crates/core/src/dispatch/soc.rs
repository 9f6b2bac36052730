use crate::grid::EssSpec;
use crate::signal_stats::IntervalStats;

/// Intermediate quantities of the SOC-change rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocBranches {
    pub p_plus: f64,
    pub p_minus: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl SocBranches {
    /// The branch selected by the signs of the regulation-adjusted powers.
    pub fn case_selected(&self) -> f64 {
        if self.p_minus >= 0.0 {
            self.l1
        } else if self.p_plus >= 0.0 {
            self.l2
        } else {
            self.l3
        }
    }

    pub fn max(&self) -> f64 {
        self.l1.max(self.l2).max(self.l3)
    }
}

/// Average powers during upward and downward regulation and the three linear
/// SOC-change candidates. A degenerate `kappa` (0 or 1) sets the missing
/// branch power to the base power.
pub fn soc_branches(p_dis: f64, p_chg: f64, pf: f64, stats: &IntervalStats, ess: &EssSpec, t_s: f64) -> SocBranches {
    let ps = p_dis - p_chg;
    let k = stats.kappa_plus;
    let p_plus = if k > 0.0 { ps + pf * stats.e_plus / (k * t_s) } else { ps };
    let p_minus = if k < 1.0 { ps - pf * stats.e_minus / ((1.0 - k) * t_s) } else { ps };
    let ce = ess.energy_cap_mws();
    let up = k * p_plus * t_s;
    let down = (1.0 - k) * p_minus * t_s;
    SocBranches {
        p_plus,
        p_minus,
        l1: up / (ess.eta_d * ce) + down / (ess.eta_d * ce),
        l2: up / (ess.eta_d * ce) + down * ess.eta_c / ce,
        l3: up * ess.eta_c / ce + down * ess.eta_c / ce,
    }
}

/// SOC decrease over one interval (positive when discharging).
pub fn soc_change(p_dis: f64, p_chg: f64, pf: f64, stats: &IntervalStats, ess: &EssSpec, t_s: f64) -> f64 {
    soc_branches(p_dis, p_chg, pf, stats, ess, t_s).max()
}

/// Linear SOC decrease used to propagate SOC through the look-ahead: the
/// discharge side divided by `eta_d`, the charge side scaled by `eta_c`, with
/// the regulation energies taken at their expected values.
pub fn certainty_equivalent_soc_change(p_dis: f64, p_chg: f64, pf: f64, e_plus: f64, e_minus: f64, ess: &EssSpec, t_s: f64) -> f64 {
    let ce = ess.energy_cap_mws();
    (p_dis * t_s + pf * e_plus) / (ess.eta_d * ce) - (p_chg * t_s + pf * e_minus) * ess.eta_c / ce
}
