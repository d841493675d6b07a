from socket import timeout as SocketTimeout

import pytest

from requests.exceptions import ConnectionError, ReadTimeout
from urllib3.exceptions import ProtocolError, ReadTimeoutError

from web.tpc.http import timed_out


def chained(outer, inner):
	try:
		try:
			raise inner
		except Exception as e:
			raise outer from e
	except Exception as e:
		return e


class TestTimedOut(object):
	def test_body_read_timeout(self):
		assert timed_out(ConnectionError(ReadTimeoutError(None, '/data/f', "Read timed out.")))
	
	def test_request_timeout(self):
		assert timed_out(ReadTimeout())
	
	def test_chained_socket_timeout(self):
		assert timed_out(chained(RuntimeError("Body interrupted."), SocketTimeout()))
	
	@pytest.mark.parametrize('error', [
			ConnectionError(ProtocolError("Connection broken.", ConnectionResetError(104, 'reset'))),
			ConnectionError("The upstream gateway timed out."),
			RuntimeError("timed out"),
		])
	def test_other_failures(self, error):
		assert not timed_out(error)
