"""Serving endpoints over HTTPS with the cheroot WSGI server.

The listening socket is bound before the application is mounted, so an endpoint asked to listen on port 0 can learn
its real port, and thus its base URL, before it is constructed.
"""

import signal
import ssl

from threading import Event, Thread
from typing import Optional, Tuple

from cheroot import wsgi
from cheroot.ssl.builtin import BuiltinSSLAdapter

from ..exc import ConfigError
from .app import Endpoint
from .config import EndpointConfig, TLSConfig


log = __import__('logging').getLogger(__name__)


def _unmounted(environ, start_response):
	start_response('503 Service Unavailable', [('Content-Type', 'text/plain'), ('Retry-After', '1')])
	return [b"Endpoint starting.\n"]


class EndpointServer:
	"""A cheroot server in a background thread, serving one endpoint application."""
	
	def __init__(self, host:str='127.0.0.1', port:int=0, *, tls:Optional[TLSConfig]=None, threads:int=32) -> None:
		self.tls = tls or TLSConfig()
		self.app: Optional[Endpoint] = None
		
		self._server = wsgi.Server((host, port), _unmounted, numthreads=threads, server_name='web.tpc')
		self._thread: Optional[Thread] = None
		self._stopping = Event()
		
		if self.tls.enabled:
			adapter = BuiltinSSLAdapter(self.tls.certificate, self.tls.private_key)
			
			if self.tls.client_ca:
				adapter.context.load_verify_locations(self.tls.client_ca)
				adapter.context.verify_mode = ssl.CERT_OPTIONAL
			
			self._server.ssl_adapter = adapter
	
	def __repr__(self) -> str:
		return f"EndpointServer({self.url!r}, running={self.running})"
	
	def __enter__(self) -> 'EndpointServer':
		return self
	
	def __exit__(self, *exc) -> None:
		self.stop()
	
	@property
	def address(self) -> Tuple[str, int]:
		return tuple(self._server.bind_addr[:2])
	
	@property
	def url(self) -> str:
		host, port = self.address
		host = f"[{host}]" if ':' in host else host
		return f"{'https' if self.tls.enabled else 'http'}://{host}:{port}"
	
	@property
	def running(self) -> bool:
		return self._thread is not None and self._thread.is_alive()
	
	def bind(self) -> Tuple[str, int]:
		"""Open the listening socket; the real port is known once this returns."""
		
		self._server.prepare()
		return self.address
	
	def mount(self, app:Endpoint) -> None:
		self.app = app
		self._server.wsgi_app = app
	
	def start(self) -> 'EndpointServer':
		if not self._server.ready:
			self.bind()
		
		self._thread = Thread(target=self._server.serve, name=f'tpc-serve-{self.address[1]}', daemon=True)
		self._thread.start()
		
		log.info(f"Serving {self.url}.", extra=dict(url=self.url, tls=self.tls.enabled))
		
		return self
	
	def stop(self) -> None:
		if self.app is not None:
			self.app.close()
		
		self._server.stop()
		
		if self._thread is not None:
			self._thread.join(10)
			self._thread = None
		
		log.info(f"Stopped serving {self.url}.", extra=dict(url=self.url))
	
	def interrupt(self, signum:Optional[int]=None, frame=None) -> None:
		"""Ask `wait` to shut down; the signature allows installation as a signal handler."""
		
		if signum is not None:
			log.warning(f"Received {signal.Signals(signum).name}; shutting down.", extra=dict(signal=signum))
		
		self._stopping.set()
	
	def wait(self) -> None:
		"""Block until the server stops, `interrupt` is called, or the process is interrupted."""
		
		try:
			while self.running and not self._stopping.wait(1):
				pass
		
		except KeyboardInterrupt:
			log.warning("Interrupted; shutting down.")
		
		finally:
			self.stop()


def serve(config:EndpointConfig, threads:Optional[int]=None) -> EndpointServer:
	"""Start serving a configured endpoint, returning the running server."""
	
	if config.base_url.startswith('https:') and not config.tls.enabled:
		raise ConfigError('tls', f"{config.base_url} is an https URL, but no certificate is configured.")
	
	server = EndpointServer(config.host, config.port, tls=config.tls,
			threads=threads or max(32, 4 * config.max_active_copies))
	
	server.bind()
	server.mount(Endpoint(config))
	
	return server.start()
