from dotenv import load_dotenv
import os

load_dotenv()

ROOT_DIR = os.path.realpath(os.path.join(os.path.dirname(__file__), ".."))

# Load variables from .env
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

OUTPUT_DIR = os.environ.get("DEGDIFF_OUTPUT_DIR", os.path.join(ROOT_DIR, "runs"))
WORKERS = int(os.environ.get("DEGDIFF_WORKERS", "1"))

API_USERNAME = os.environ.get("API_USERNAME")
API_PASSWORD = os.environ.get("API_PASSWORD")

# Computational domain [-X_MAX, X_MAX] and its resolution
X_MAX = 12.0
N_CELLS = 2400

# Time stepping
T_END = 10.0
DT_INITIAL = 1e-4
DT_MAX = 0.005
DT_GROWTH = 1.2

# Recorded times are log-spaced in [FIRST_SNAPSHOT, T_END]
N_SNAPSHOTS = 60
FIRST_SNAPSHOT = 1e-2

# Picard iteration of the implicit step
PICARD_TOL = 1e-10
PICARD_MAX_ITERS = 100

# Values in [-UNDERSHOOT_TOL, 0) are clamped, anything lower fails the step
UNDERSHOOT_TOL = 1e-12

# Runs abort when v exceeds BOUNDARY_GUARD_LEVEL within BOUNDARY_GUARD_CELLS of either end
BOUNDARY_GUARD_CELLS = 5
BOUNDARY_GUARD_LEVEL = 1e-10

# Front detection level, relative to max v at each time
FRONT_THRESHOLD = 1e-10

FIT_WINDOW = (1.0, 10.0)

# Number of xi points in the self-similar profile table
PROFILE_POINTS = 201

# (gamma0, m) pairs of the front-propagation runs in the acceptance suite
FRONT_PAIRS = ((2.0, 1.0), (1.0, 0.0), (1.0, 1.0))
