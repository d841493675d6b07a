"""Wire-level vocabulary of the COPY verb shared by endpoints and orchestrators."""

from enum import Enum


class TransferMode(Enum):
	PULL = 'PULL'  # The destination is active; the COPY carries a `Source` header.
	PUSH = 'PUSH'  # The source is active; the COPY carries a `Destination` header.
	
	def __str__(self) -> str:
		return self.value
	
	@property
	def header(self) -> str:
		"""The COPY request header naming the passive side in this mode."""
		return SOURCE if self is TransferMode.PULL else DESTINATION


SOURCE = 'Source'
DESTINATION = 'Destination'
OVERWRITE = 'Overwrite'
STREAMS = 'X-Number-Of-Streams'
TRANSFER_HEADER = 'TransferHeader'  # Prefix of headers forwarded, prefix removed, to the passive endpoint.

DIRECT = 'tpc.direct'  # Query parameter marking a request that has already been redirected once.

STATUS_PATH = '/.tpc/status'
DISCOVERY_PATH = '/.well-known/oauth-authorization-server'
TOKEN_PATH = '/token'

MAX_STREAMS = 16
MAX_REDIRECTS = 4
