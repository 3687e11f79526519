"""Spinning-radar odometry from conservative filtering, oriented surface points and multi-keyframe registration."""
from .geometry import Point2, Pose2, Velocity2, compose, inverse, relative
from .radar_io import PointCloud, PolarScan, Trajectory, read_scan, read_trajectory, write_scan, write_trajectory
from .filtering import CaCfarConfig, KStrongestConfig, ca_cfar, k_strongest
from .motion import compensate, predict
from .features import FeatureConfig, SurfacePointSet, compute_surface_points
from .registration import Cost, Loss, RegistrationConfig, WeightScheme, register
from .odometry import OdometryConfig, process_scan, run_sequence
from .evaluation import ate, kitti_drift, rpe

__version__ = "0.1.0"
