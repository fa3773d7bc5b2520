"""Controllable exposure adjustment via curve estimation and tangent-line
distillation: a self-contained numpy training and inference stack."""

from .curves import (TangentMaps, analytic_tangent, apply_high_order,
                     apply_tangent, le_step)
from .exposure import sample_training_map, uniform_map, variant_map
from .networks import (Student, StudentConfig, Teacher, TeacherConfig,
                       load_checkpoint, load_student, load_teacher, save_checkpoint)
from .training import TrainConfig, desk_scale_config, distill_student, train_teacher

__version__ = "0.1.0"

__all__ = [
    "TangentMaps", "analytic_tangent", "apply_high_order", "apply_tangent",
    "le_step", "sample_training_map", "uniform_map", "variant_map",
    "Student", "StudentConfig", "Teacher", "TeacherConfig",
    "load_checkpoint", "load_student", "load_teacher", "save_checkpoint",
    "TrainConfig", "desk_scale_config", "distill_student", "train_teacher",
]
