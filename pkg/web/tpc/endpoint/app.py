"""The storage endpoint: a WSGI application serving one namespace over WebDAV, and copying to and from others.

Every storage verb is a `do_<METHOD>` handler carrying an access control list, attached with `when`. A request is
authorized by evaluating that list against a `RequestContext`, followed by a base policy of `never`, and is then
handled. Denials answer 401 when no acceptable token was presented and 403 when a genuine token lacked the scope.
"""

from typing import Iterator, Optional
from urllib.parse import urlencode
from xml.etree import ElementTree as etree

from webob import Request, Response
from webob.exc import HTTPException, HTTPFound, HTTPMethodNotAllowed, HTTPPreconditionFailed, status_map

from ..acl import ACL, RequestContext
from ..exc import Kind, TpcError
from ..http import Transport
from ..issuer import TokenIssuer
from ..path import VirtualPath, join_url, normalize_path, split_url
from ..predicate import Grants, Transfer, always, never, stat
from ..protocol import (DESTINATION, DIRECT, DISCOVERY_PATH, MAX_STREAMS, OVERWRITE, SOURCE, STATUS_PATH, STREAMS,
		TOKEN_PATH, TRANSFER_HEADER, TransferMode)
from ..scope import Activity
from ..store import ObjectRecord, Store
from ..util import Counter
from ..when import when
from .config import EndpointConfig
from .fault import FaultInjector
from .job import CopyJob, JobManager
from .transfer import execute_pull, execute_push


log = __import__('logging').getLogger(__name__)

DAV = 'DAV:'
REDIRECTED = frozenset({'GET', 'PUT'})

etree.register_namespace('D', DAV)


def _dav(name:str) -> str:
	return f'{{{DAV}}}{name}'


def wants_digest(request:Request) -> bool:
	"""Whether an RFC 3230 `Want-Digest` header asks for SHA-256."""
	
	for part in request.headers.get('Want-Digest', '').split(','):
		if part.split(';')[0].strip().lower() == 'sha-256':
			return True
	
	return False


def forwarded_headers(request:Request) -> dict:
	"""Headers to present to the passive endpoint: every `TransferHeader<Name>`, with the prefix removed."""
	
	prefix = TRANSFER_HEADER.lower()
	forwarded = {}
	
	for name, value in request.headers.items():
		if name.lower().startswith(prefix) and len(name) > len(prefix):
			forwarded[name[len(prefix):].title()] = value
	
	return forwarded


class Endpoint:
	"""One storage endpoint.

	Construct with an `EndpointConfig`; a store or transport may be supplied to share them or substitute test doubles.
	Instances are WSGI applications.
	"""
	
	def __init__(self, config:EndpointConfig, store:Optional[Store]=None, transport:Optional[Transport]=None) -> None:
		tls = config.tls
		
		self.config = config
		self.store = store if store is not None else config.store.build()
		self.issuer = TokenIssuer(config.token_issuer, config.token_root_key, config.policy,
				enabled=config.token_service)
		self.faults = FaultInjector(config.faults)
		self.jobs = JobManager(config.max_active_copies)
		self.transport = transport or Transport(verify=tls.verify, timeout=config.remote_timeout,
				cert=(tls.certificate, tls.private_key) if tls.enabled else None)
		
		self._turn = Counter(len(config.redirect_pool)) if config.redirect_pool else None
		
		log.info(f"Endpoint {config.base_url} prepared.", extra=dict(base_url=config.base_url, store=repr(self.store),
				pool=len(config.redirect_pool), copy=config.copy, propfind=config.propfind))
	
	def __repr__(self) -> str:
		return f"Endpoint({self.config.base_url!r}, {self.store!r})"
	
	@property
	def allowed(self) -> list:
		"""The methods this endpoint answers, as configured."""
		
		methods = ['OPTIONS', 'HEAD', 'GET', 'PUT', 'DELETE']
		
		if self.config.propfind:
			methods.append('PROPFIND')
		
		if self.config.copy:
			methods.append('COPY')
		
		return methods
	
	def close(self) -> None:
		self.jobs.shutdown()
		self.transport.close()
	
	# WSGI.
	
	def __call__(self, environ, start_response):
		request = Request(environ)
		
		try:
			response = self.dispatch(request)
		
		except TpcError as e:
			level = log.warning if e.status < 500 else log.error
			path = environ.get('PATH_INFO', '')
			level(f"{request.method} {path} failed: {e}", extra=dict(method=request.method, path=path,
					kind=e.kind.name))
			response = e.response()
		
		except HTTPException as e:
			response = e
		
		return response(environ, start_response)
	
	def dispatch(self, request:Request) -> Response:
		method = request.method
		
		try:
			path_info = request.path_info
		except UnicodeDecodeError:
			raise TpcError(Kind.BAD_REQUEST, "Path is not valid UTF-8 once decoded.")
		
		if path_info == DISCOVERY_PATH:
			return self.issuer.discovery(request)
		
		if path_info == TOKEN_PATH:
			return self.issuer.token(request)
		
		if path_info == STATUS_PATH or path_info.startswith(STATUS_PATH + '/'):
			return self.status(request, path_info[len(STATUS_PATH) + 1:])
		
		if method not in self.allowed:
			raise HTTPMethodNotAllowed(headers={'Allow': ', '.join(self.allowed)})
		
		handler = getattr(self, 'do_' + method)
		path = normalize_path(path_info)
		
		injected = self.faults.error(method)
		
		if injected:
			return status_map[injected]("Injected fault.")
		
		redirect = self.redirect(request, path)
		
		if redirect is not None:
			return redirect
		
		context = RequestContext(request, path, self.config.token_root_key, self.config.token_issuer,
				mode=self.mode(request) if method == 'COPY' else None)
		
		acl = ACL(context=context, policy=(never, ))
		acl.extend_from(handler, source=handler.__name__)
		result = acl.is_authorized
		
		if not result:
			return self.deny(request, context, result.predicate)
		
		if __debug__:
			log.debug(f"{method} {path} authorized by {result.predicate!r}.", extra=dict(method=method,
					path=str(path), predicate=repr(result.predicate), source=result.source))
		
		return handler(request, context)
	
	def deny(self, request:Request, context:RequestContext, predicate) -> Response:
		status = context.denial_status
		error = 'invalid_token' if status == 401 else 'insufficient_scope'
		
		log.warning(f"Denied {request.method} {context.path}: {context.denial_detail}", extra=dict(
				method = request.method,
				path = str(context.path),
				status = status,
				predicate = repr(predicate),
			))
		
		response = status_map[status](context.denial_detail)
		
		if context.token is None:
			response.headers['WWW-Authenticate'] = f'Bearer realm="{self.config.token_issuer}"'
		else:
			response.headers['WWW-Authenticate'] = f'Bearer realm="{self.config.token_issuer}", error="{error}"'
		
		return response
	
	def redirect(self, request:Request, path:VirtualPath) -> Optional[Response]:
		"""Send a GET or PUT on to the next member of the redirect pool, unless it was already redirected once."""
		
		if self._turn is None or request.method not in REDIRECTED or DIRECT in request.GET:
			return None
		
		member = self.config.redirect_pool[next(self._turn)]
		query = list(request.GET.items()) + [(DIRECT, '1')]
		location = join_url(member, path) + '?' + urlencode(query)
		
		if __debug__:
			log.debug(f"Redirecting {request.method} {path} to {member}.", extra=dict(method=request.method,
					path=str(path), location=location))
		
		return HTTPFound(location=location)
	
	def mode(self, request:Request) -> TransferMode:
		"""The direction of a COPY request, from exactly one of its `Source` and `Destination` headers."""
		
		source = request.headers.get(SOURCE)
		destination = request.headers.get(DESTINATION)
		
		if bool(source) == bool(destination):
			raise TpcError(Kind.BAD_REQUEST, "A COPY request names exactly one of Source and Destination.")
		
		mode = TransferMode.PULL if source else TransferMode.PUSH
		url = source or destination
		
		if not url.lower().startswith('https://'):
			raise TpcError(Kind.BAD_REQUEST, f"The {mode.header} of a COPY must be an absolute https URL: {url!r}")
		
		split_url(url)
		
		return mode
	
	# Operational status.
	
	def status(self, request:Request, identifier:str='') -> Response:
		if request.method not in ('GET', 'HEAD'):
			raise HTTPMethodNotAllowed(headers={'Allow': 'GET, HEAD'})
		
		if identifier:
			job = self.jobs.get(identifier)
			
			if job is None:
				raise TpcError(Kind.NOT_FOUND, f"No copy job {identifier}.")
			
			return Response(json_body=job.as_dict())
		
		return Response(json_body={
				'base_url': self.config.base_url,
				'limit': self.jobs.limit,
				'running': self.jobs.running,
				'peak': self.jobs.peak,
				'used_bytes': self.store.used,
				'jobs': [job.as_dict() for job in self.jobs.jobs],
			})
	
	# Storage verbs.
	
	def _headers(self, response:Response, record:ObjectRecord) -> None:
		response.headers['Digest'] = record.digest
		response.headers['ETag'] = record.etag
		response.last_modified = record.created_at
		
		if self.config.faults.ranges:
			response.headers['Accept-Ranges'] = 'bytes'
	
	@when(always, inherit=False)
	def do_OPTIONS(self, request:Request, context:RequestContext) -> Response:
		response = Response(status=200)
		response.headers['Allow'] = ', '.join(self.allowed)
		response.headers['DAV'] = '1'
		return response
	
	@when(stat)
	def do_HEAD(self, request:Request, context:RequestContext) -> Response:
		record = self.store.stat(context.path)
		
		response = Response(status=200, content_type='application/octet-stream')
		self._headers(response, record)
		response.content_length = record.size
		
		return response
	
	@when(Grants(Activity.DOWNLOAD))
	def do_GET(self, request:Request, context:RequestContext) -> Response:
		record = self.store.stat(context.path)
		wanted = request.range if self.config.faults.ranges else None
		interval = None
		
		if wanted is not None:
			interval = wanted.range_for_length(record.size)
			
			if interval is None:
				response = status_map[416]("The requested range lies outside the object.")
				response.headers['Content-Range'] = f'bytes */{record.size}'
				return response
		
		chunks, record = self.store.get(context.path, range=interval)
		
		response = Response(status=206 if interval else 200, content_type='application/octet-stream')
		self._headers(response, record)
		response.app_iter = self.faults.body(chunks)
		
		if interval:
			response.content_range = (interval[0], interval[1], record.size)
			response.content_length = interval[1] - interval[0]
		else:
			response.content_length = record.size
		
		return response
	
	@when(Grants(Activity.UPLOAD, Activity.MANAGE))
	def do_PUT(self, request:Request, context:RequestContext) -> Response:
		path = context.path
		existed = self.store.exists(path)
		manage = context.authorizes(Activity.MANAGE)
		
		if existed and request.headers.get('If-None-Match', '').strip() == '*':
			raise HTTPPreconditionFailed(f"{path} exists.")
		
		if existed and not manage:
			raise TpcError(Kind.CONFLICT, f"{path} exists; replacing it requires the MANAGE activity.")
		
		record = self.store.put(path, self._body(request), overwrite=manage)
		
		log.info(f"Stored {path}.", extra=dict(path=str(path), size=record.size, generation=record.generation,
				replaced=existed))
		
		response = Response(status=204 if existed else 201)
		response.headers['ETag'] = record.etag
		
		if wants_digest(request):
			response.headers['Digest'] = record.digest
		
		return response
	
	@staticmethod
	def _body(request:Request) -> Iterator[bytes]:
		stream = request.body_file if request.content_length is not None else request.environ['wsgi.input']
		
		while True:
			chunk = stream.read(64 * 1024)
			
			if not chunk:
				break
			
			yield chunk
	
	@when(Grants(Activity.DELETE))
	def do_DELETE(self, request:Request, context:RequestContext) -> Response:
		record = self.store.delete(context.path)
		
		log.info(f"Deleted {context.path}.", extra=dict(path=str(context.path), generation=record.generation))
		
		return Response(status=204)
	
	@when(Grants(Activity.LIST))
	def do_PROPFIND(self, request:Request, context:RequestContext) -> Response:
		path = context.path
		depth = request.headers.get('Depth', '1').strip()
		
		if path.is_root or self.store.is_container(path):
			listing = [(path, True, None)]
			
			if depth != '0':
				listing.extend((path / entry.name, entry.is_container, entry.record)
						for entry in self.store.list(path))
		
		else:
			listing = [(path, False, self.store.stat(path))]
		
		root = etree.Element(_dav('multistatus'))
		
		for target, container, record in listing:
			root.append(self._propstat(target, container, record))
		
		response = Response(status=207, content_type='application/xml', charset='utf-8')
		response.body = etree.tostring(root, encoding='utf-8', xml_declaration=True)
		
		return response
	
	def _propstat(self, path:VirtualPath, container:bool, record:Optional[ObjectRecord]) -> etree.Element:
		element = etree.Element(_dav('response'))
		href = join_url('', path)
		etree.SubElement(element, _dav('href')).text = href + '/' if container and not path.is_root else href
		
		propstat = etree.SubElement(element, _dav('propstat'))
		prop = etree.SubElement(propstat, _dav('prop'))
		etree.SubElement(prop, _dav('displayname')).text = path.name
		kind = etree.SubElement(prop, _dav('resourcetype'))
		
		if container:
			etree.SubElement(kind, _dav('collection'))
		
		elif record is not None:
			etree.SubElement(prop, _dav('getcontentlength')).text = str(record.size)
			etree.SubElement(prop, _dav('getetag')).text = record.etag
		
		etree.SubElement(propstat, _dav('status')).text = 'HTTP/1.1 200 OK'
		
		return element
	
	@when(Transfer(pull=Grants(Activity.UPLOAD, Activity.MANAGE), push=Grants(Activity.DOWNLOAD)))
	def do_COPY(self, request:Request, context:RequestContext) -> Response:
		config = self.config
		path = context.path
		mode = context.mode
		remote = request.headers[mode.header]
		streams = self._streams(request) if mode is TransferMode.PULL else 1
		overwrite = False
		
		if mode is TransferMode.PULL:
			if self.store.is_container(path) or path.is_root:
				raise TpcError(Kind.CONFLICT, f"{path} is a collection.")
			
			if self.store.exists(path):
				if request.headers.get(OVERWRITE, 'T').strip().upper() == 'F':
					raise HTTPPreconditionFailed(f"{path} exists and Overwrite is F.")
				
				if not context.authorizes(Activity.MANAGE):
					raise TpcError(Kind.CONFLICT, f"{path} exists; replacing it requires the MANAGE activity.")
			
			overwrite = context.authorizes(Activity.MANAGE)
			
			def work(job):
				execute_pull(job, self.store, self.transport, min_stripe_bytes=config.min_stripe_bytes,
						remote_timeout=config.remote_timeout)
		
		else:
			self.store.stat(path)
			
			def work(job):
				execute_push(job, self.store, self.transport, remote_timeout=config.remote_timeout)
		
		job = CopyJob(mode, path, remote, forwarded=forwarded_headers(request), streams=streams,
				overwrite=overwrite)
		
		log.info(f"Accepted {mode} COPY of {path} {'from' if mode is TransferMode.PULL else 'to'} {remote}.",
				extra=dict(job=job.id, mode=str(mode), path=str(path), remote=remote, streams=streams))
		
		self.jobs.submit(job, work)
		
		response = Response(status=202, content_type='text/plain', charset='utf-8')
		response.headers['Cache-Control'] = 'no-cache'
		response.app_iter = self.markers(job)
		
		return response
	
	def _streams(self, request:Request) -> int:
		value = request.headers.get(STREAMS)
		
		if value is None:
			return self.config.pull_streams
		
		try:
			streams = int(value)
		except ValueError:
			raise TpcError(Kind.BAD_REQUEST, f"{STREAMS} must be an integer: {value!r}")
		
		return max(1, min(streams, MAX_STREAMS))
	
	def markers(self, job:CopyJob) -> Iterator[bytes]:
		"""The body of a COPY response: a marker block per stripe every marker period, then the terminal line.

		Closing the body before the job finishes, as happens when the client disconnects, cancels the job.
		"""
		
		period = self.config.marker_period
		
		try:
			while not job.wait(period):
				yield ''.join(marker.render() for marker in job.markers()).encode('utf-8')
			
			yield (''.join(marker.render() for marker in job.markers()) + job.terminal.render()).encode('utf-8')
		
		finally:
			if not job.state.final:
				job.cancel()