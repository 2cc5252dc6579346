"""Construction of the focusing initial data."""
from .density import f0_rvp, f0_vp
from .plans import (FocusingTimeLaw, RvpPlan, VpPlan, plan_rvp, plan_vp, relaxed_rvp_plan, relaxed_vp_plan,
                    t_of_b)
from .profile import CutoffChi, ProfileH, make_profile, vp_cutoff
from .sampling import ParticleSet, SupportBox, SupportReport, WeightedParticle, certify_support, sample_plan, sample_support

__all__ = ["CutoffChi", "FocusingTimeLaw", "ParticleSet", "ProfileH", "RvpPlan", "SupportBox", "SupportReport", "VpPlan",
           "WeightedParticle", "certify_support", "f0_rvp", "f0_vp", "make_profile", "plan_rvp", "plan_vp",
           "relaxed_rvp_plan", "relaxed_vp_plan", "sample_plan", "sample_support", "t_of_b", "vp_cutoff"]
