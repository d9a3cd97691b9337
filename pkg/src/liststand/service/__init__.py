from liststand.service.app import create_app
from liststand.service.state import DEFAULT_COLLECTION, AppState, Job, JobManager

__all__ = ["AppState", "DEFAULT_COLLECTION", "Job", "JobManager", "create_app"]
