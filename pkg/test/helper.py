from contextlib import contextmanager
from time import time
from typing import Optional

from webob import Request

from web.tpc.endpoint import Endpoint, EndpointConfig
from web.tpc.issuer import AuthorizationPolicy, Client
from web.tpc.predicate import always, never, Grants
from web.tpc.scope import Activity, parse_scope
from web.tpc.token import mint
from web.tpc.when import when


ROOT_KEY = 'a root key known only to the endpoint under test'
BASE = 'https://storage.example'
SECRET = 'sesame'


@contextmanager
def must_be_called(n=None):
	"""Ensure the target function is called.
	
	If an `n` value is supplied, ensure the target is called that many times.
	"""
	called = []
	
	def must_call(context=None):
		called.append(context)
	
	yield must_call
	
	if n is None:
		assert len(called) > 0, "Predicate that must be called, was not."
	
	else:
		assert len(called) == n, "Predicate that must be called " + str(n) + " times was called " + \
				str(len(called)) + " times."


@contextmanager
def must_not_be_called():
	"""Ensure the target function is never called."""
	called = []
	
	def must_not_call(context=None):
		called.append(context)
	
	yield must_not_call
	
	assert len(called) == 0, "Predicate that must not be called, was."


class StubContext:
	"""Stands in for a `RequestContext`: authorizes exactly the activities it is given."""
	
	def __init__(self, *activities, mode=None):
		self.granted = set(activities)
		self.mode = mode
		self.asked = []
	
	def authorizes(self, activity):
		self.asked.append(activity)
		return activity in self.granted


class Handlers:
	"""Access control lists attached the way endpoint handlers attach them."""
	
	def unguarded(self):
		pass
	
	@when(always)
	def granted(self):
		pass
	
	@when(never)
	def denied(self):
		pass
	
	@when(Grants(Activity.DOWNLOAD))
	def download(self):
		pass
	
	@when(inherit=False)
	def reset(self):
		pass


def token(*scopes:str, key:str=ROOT_KEY, issuer:str=BASE, lifetime:int=3600, audience:Optional[str]=None) -> str:
	"""A serialized token carrying the given `ACTIVITY:PATH` scopes."""
	
	return mint(key, issuer, [parse_scope(s) for s in scopes], time() + lifetime, audience=audience).serialize()


def policy(*grants:str) -> AuthorizationPolicy:
	return AuthorizationPolicy(clients={'mover': Client(SECRET, [parse_scope(g) for g in grants], [])})


def endpoint(**options) -> Endpoint:
	"""An in-memory endpoint, not served; drive it with `Request.blank(...).get_response(...)`."""
	
	options.setdefault('policy', policy(*(f'{a}:/' for a in Activity)))
	return Endpoint(EndpointConfig(base_url=BASE, token_root_key=ROOT_KEY, **options))


def blank(path:str, method:str='GET', bearer:Optional[str]=None, **kw) -> Request:
	request = Request.blank(path, method=method, **kw)
	
	if bearer:
		request.headers['Authorization'] = 'Bearer ' + bearer
	
	return request
