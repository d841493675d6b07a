"""Authorization activities and the `ACTIVITY:PATH` scopes granting them."""

from dataclasses import dataclass
from enum import Enum

from .exc import Kind, TpcError
from .path import VirtualPath, normalize_path, path_contains


class Activity(Enum):
	UPLOAD = 'UPLOAD'  # Create new resources; existing data is never altered.
	DOWNLOAD = 'DOWNLOAD'  # Read data.
	DELETE = 'DELETE'  # Remove resources.
	MANAGE = 'MANAGE'  # Change metadata, and perform operations that may overwrite existing data.
	LIST = 'LIST'  # List the contents of a container.
	
	def __str__(self) -> str:
		return self.value


@dataclass(frozen=True, order=True)
class Scope:
	activity: Activity
	path: VirtualPath
	
	def __post_init__(self):
		if not isinstance(self.activity, Activity):
			raise TpcError(Kind.BAD_REQUEST, f"Unknown activity: {self.activity!r}")
	
	@property
	def grantable(self) -> bool:
		"""Can this scope be granted? Its text form must parse back, so the path may not contain a colon.

		Scopes needed by a request name stored paths as they are; a grant covering a parent still authorizes them.
		"""
		
		return not any(':' in segment for segment in self.path.segments)
	
	@classmethod
	def covering(cls, activity:Activity, path:VirtualPath) -> 'Scope':
		"""The narrowest grantable scope covering `path`: the path itself, or its deepest ancestor free of colons."""
		
		for index, segment in enumerate(path.segments):
			if ':' in segment:
				return cls(activity, VirtualPath(path.segments[:index]))
		
		return cls(activity, path)
	
	def __str__(self) -> str:
		return f"{self.activity.value}:{self.path}"
	
	def __repr__(self) -> str:
		return f"Scope('{self}')"
	
	def covers(self, needed:'Scope') -> bool:
		"""Does this grant authorize the needed activity on the needed path?"""
		return self.activity is needed.activity and path_contains(self.path, needed.path)


def parse_scope(text:str) -> Scope:
	"""Parse the `ACTIVITY:PATH` text form; the activity name is matched case-sensitively."""
	
	activity, colon, path = text.partition(':')
	
	if not colon:
		raise TpcError(Kind.BAD_REQUEST, f"Scope is missing the activity separator: {text!r}")
	
	if activity not in Activity.__members__:
		raise TpcError(Kind.BAD_REQUEST, f"Unknown scope activity: {activity!r}")
	
	if ':' in path:
		raise TpcError(Kind.BAD_REQUEST, f"Scope paths may not contain a colon: {text!r}")
	
	return Scope(Activity[activity], normalize_path(path))
