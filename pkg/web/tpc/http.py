"""Outbound HTTP for active endpoints and orchestrators alike.

Redirects are followed by hand. The automatic handling in `requests` drops the `Authorization` header whenever the
port changes, and rewrites a redirected PUT into a body-less GET on 302; both break load-balanced storage services
whose pool members share one origin host and differ by port. Credentials are re-sent only to targets sharing the
original scheme and host.
"""

from socket import timeout as SocketTimeout
from threading import local
from typing import Mapping, Optional, Union
from urllib.parse import urljoin, urlsplit

import requests

from requests.exceptions import ConnectionError, RequestException, SSLError, Timeout
from urllib3.exceptions import ReadTimeoutError

from .exc import Kind, TpcError
from .protocol import MAX_REDIRECTS


log = __import__('logging').getLogger(__name__)

REDIRECTS = frozenset({301, 302, 303, 307, 308})

Verify = Union[bool, str]


class Transport:
	"""A thread-aware HTTP client: every thread using a transport gets its own session and thus its own connections."""
	
	def __init__(self, *, verify:Verify=True, timeout:float=60.0, cert:Optional[tuple]=None,
			trust_env:bool=False, max_redirects:int=MAX_REDIRECTS, user_agent:Optional[str]=None) -> None:
		self.verify = verify
		self.timeout = timeout
		self.cert = cert
		self.trust_env = trust_env
		self.max_redirects = max_redirects
		self.user_agent = user_agent
		self._local = local()
	
	def __repr__(self) -> str:
		return f"Transport(verify={self.verify!r}, timeout={self.timeout!r}, max_redirects={self.max_redirects!r})"
	
	@property
	def session(self) -> requests.Session:
		session = getattr(self._local, 'session', None)
		
		if session is None:
			session = self._local.session = requests.Session()
			session.verify = self.verify
			session.cert = self.cert
			session.trust_env = self.trust_env
			
			if self.user_agent:
				session.headers['User-Agent'] = self.user_agent
		
		return session
	
	def close(self) -> None:
		"""Close the calling thread's session."""
		
		session = getattr(self._local, 'session', None)
		
		if session is not None:
			session.close()
			self._local.session = None
	
	def request(self, method:str, url:str, *, headers:Optional[Mapping[str, str]]=None, data=None,
			stream:bool=False, timeout:Optional[float]=None) -> requests.Response:
		"""Issue a request, following up to `max_redirects` redirects.

		Transport level failures are raised as classified `TpcError` instances; HTTP error statuses are returned.
		"""
		
		headers = dict(headers or {})
		origin = urlsplit(url)
		timeout = self.timeout if timeout is None else timeout
		
		for hop in range(self.max_redirects + 1):
			if hop and hasattr(data, 'seek'):
				data.seek(0)
			
			try:
				response = self.session.request(method, url, headers=headers, data=data, stream=stream,
						allow_redirects=False, timeout=timeout)
			
			except Timeout as e:
				raise TpcError(Kind.TIMEOUT, f"{method} {url} made no progress within {timeout} seconds: {e}")
			
			except SSLError as e:
				raise TpcError(Kind.REMOTE_FAILURE, f"TLS failure talking to {url}: {e}")
			
			except ConnectionError as e:
				raise TpcError(Kind.REMOTE_FAILURE, f"Unable to reach {url}: {e}")
			
			except RequestException as e:
				raise TpcError(Kind.REMOTE_FAILURE, f"{method} {url} failed: {e}")
			
			if response.status_code not in REDIRECTS or 'Location' not in response.headers:
				if __debug__:
					log.debug(f"{method} {url} answered {response.status_code}.", extra=dict(
							method = method,
							url = url,
							status = response.status_code,
							hops = hop,
						))
				
				return response
			
			target = urljoin(url, response.headers['Location'])
			response.close()
			
			if hop == self.max_redirects:
				break
			
			destination = urlsplit(target)
			
			if (destination.scheme, destination.hostname) != (origin.scheme, origin.hostname):
				headers.pop('Authorization', None)
			
			log.warning(f"Following redirect of {method} {url}.", extra=dict(method=method, url=url,
					location=target, hop=hop + 1))
			
			url = target
		
		raise TpcError(Kind.PROTOCOL_VIOLATION, f"{method} exceeded {self.max_redirects} redirects, last to {url}.")


def check(response:requests.Response, *expected:int, remote:bool=False) -> requests.Response:
	"""Raise a classified failure unless the response status is one of those expected."""
	
	if response.status_code in expected:
		return response
	
	detail = f"{response.request.method} {response.url} answered {response.status_code}"
	
	response.close()
	
	raise TpcError.from_status(response.status_code, detail, remote=remote)


def timed_out(error:BaseException) -> bool:
	"""Did a failure while reading a response body stem from a read timeout?

	Mid-body, `requests` wraps the urllib3 `ReadTimeoutError` in a `ConnectionError` as its sole argument, so the
	arguments are searched along with the chain of causes.
	"""
	
	pending, seen = [error], set()
	
	while pending:
		current = pending.pop()
		
		if not isinstance(current, BaseException) or id(current) in seen:
			continue
		
		seen.add(id(current))
		
		if isinstance(current, (Timeout, ReadTimeoutError, SocketTimeout, TimeoutError)):
			return True
		
		pending.extend(current.args)
		pending.extend((current.__cause__, current.__context__))
	
	return False
