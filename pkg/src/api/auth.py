import secrets

from fastapi import Depends, HTTPException, status
from fastapi.security import HTTPBasic, HTTPBasicCredentials
from project_config.logger import get_logger
from project_config.settings import API_USERNAME, API_PASSWORD

logger = get_logger(__name__, log_file="auth.log")

security = HTTPBasic()


def _matches(given: str, expected) -> bool:
    if expected is None:
        return False
    return secrets.compare_digest(given.encode("utf-8"), expected.encode("utf-8"))


def simple_auth(credentials: HTTPBasicCredentials = Depends(security)) -> bool:
    """
    Username/password check using Basic Auth.

    Compares the credentials against API_USERNAME and API_PASSWORD from the environment
    (exposed via project_config.settings). When they are unset every request is rejected.

    :param credentials: The HTTP Basic credentials (username, password).
    :return: True if authentication is successful, otherwise raises HTTPException.
    """
    logger.info("Attempting to authenticate user.")

    if not (_matches(credentials.username, API_USERNAME) and _matches(credentials.password, API_PASSWORD)):
        logger.warning("Authentication failed: Invalid credentials.")
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Invalid username or password.",
            headers={"WWW-Authenticate": "Basic"},
        )

    logger.info("Authentication successful.")
    return True
