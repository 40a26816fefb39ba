//! Workload generation: motion and scene traces, burst injection, and the
//! parametric cost / error / quality models.

pub mod model;
pub mod motion;
pub mod scene;
pub mod trace_io;

pub use model::{CostContext, CostErrorModel, ErrorModel, QualityModel, RenderModel, VioCostModel};
pub use motion::{generate_motion, inject_motion_spike, MotionClass, MotionParams, MotionSample, MotionTrace};
pub use scene::{generate_scene, inject_scene_swap, AppPreset, SceneSample, SceneSwap, SceneTrace};
