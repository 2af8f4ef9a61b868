"""Dynamic pick-and-place on a legged manipulator: simulator, rewards, curriculum, RL harness."""

__version__ = "0.1.0"
