"""Storage endpoints: the WebDAV application, its configuration, copy jobs, and the server that hosts them."""

from .app import Endpoint
from .config import EndpointConfig, FaultConfig, TLSConfig
from .job import CopyJob, JobManager, State
from .server import EndpointServer, serve


__all__ = ['CopyJob', 'Endpoint', 'EndpointConfig', 'EndpointServer', 'FaultConfig', 'JobManager', 'State',
		'TLSConfig', 'serve']
