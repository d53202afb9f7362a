# scalewave/config/settings.py
# Library-wide defaults. Every value can be overridden from a run config.

LOG_LEVEL_ENV = "SCALEWAVE_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

ARTIFACT_VERSION = 1

# series-core
STD_FLOOR = 1e-8
DEFAULT_PRICE_FEATURE = "close"
DEFAULT_FEATURES = ("open", "high", "low", "close", "volume", "returns")

# dtw
VOLATILITY_EPS = 1e-8
DEFAULT_VOLATILITY_WINDOW = 5

# sipr
DEFAULT_K = 8
DEFAULT_L_MIN = 16
DEFAULT_L_MAX = 32
DEFAULT_MAX_ITER = 50
DEFAULT_TOL = 1e-6
DEFAULT_DBA_ITERATIONS = 10

# patcher
DEFAULT_PATCH_LEN = 16
DEFAULT_PATCH_STRIDE = 8

# swt
DEFAULT_BASIS = "db4"
DEFAULT_LEVELS = 3
DEFAULT_WINDOW_LEN = 64

# predictor
DEFAULT_MODEL_WIDTH = 16
DEFAULT_LEARNING_RATE = 1e-2
DEFAULT_EPOCHS = 5
DEFAULT_BATCH_SIZE = 16
DEFAULT_LABEL_SCALE = 100.0
JOINT_LOSS_WEIGHT = 0.5

# backtest
DEFAULT_TOP_K = 5
TRADING_DAYS_PER_YEAR = 252
