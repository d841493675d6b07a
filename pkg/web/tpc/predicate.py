"""A _predicate_ is any callable object that optionally accepts a request context as its first positional parameter.

Predicates vote: `True` grants access, `False` denies it, and `None` abstains, leaving the decision to the next
predicate in line. One might look like:

```python
def always(context=None):
	return True
```

The predicates specific to transfer endpoints consult the bearer token presented with the request.


## Scope Grants

Grant access if the presented token authorizes any of the given activities on the requested path.

```python
@when(Grants(Activity.UPLOAD, Activity.MANAGE))
def do_PUT(self, context):
	...
```

Tokens which do not authorize the activity cause an abstention, not a denial, so that alternatives may be offered;
end every access control list with `never` to deny by default.


## Transfer Direction

A COPY request makes the endpoint either the destination of a pull or the source of a push, each demanding a
different activity on the local path. `Transfer` selects a predicate by the mode of the request.

```python
@when(Transfer(pull=Grants(Activity.UPLOAD, Activity.MANAGE), push=Grants(Activity.DOWNLOAD)))
def do_COPY(self, context):
	...
```
"""

from .protocol import TransferMode
from .scope import Activity


class Predicate:
	__slots__ = ()
	
	def __call__(self, context=None):
		raise NotImplementedError()

class Always(Predicate):
	"""Always grant access."""
	
	__slots__ = ()
	
	def __call__(self, context=None):
		return True
	
	def __repr__(self):
		return 'always'

always = Always()


class Never(Predicate):
	"""Always deny access."""
	
	__slots__ = ()
	
	def __call__(self, context=None):
		return False
	
	def __repr__(self):
		return 'never'

never = Never()


class Grants(Predicate):
	"""Grant if the request's bearer token authorizes any of the given activities on the requested path.
	
	Abstains otherwise; the context records each verdict so a final denial can distinguish an unacceptable token from
	an insufficient one.
	"""
	
	__slots__ = ('activities', )
	
	def __init__(self, *activities):
		if __debug__:
			if not activities:
				raise TypeError("You must supply one or more activities to grant.")
			
			for activity in activities:
				if not isinstance(activity, Activity):
					raise TypeError(f"Not an activity: {activity!r}")
		
		self.activities = activities
	
	def __call__(self, context):
		for activity in self.activities:
			if context.authorizes(activity):
				return True
	
	def __repr__(self):
		return f"Grants({', '.join(str(a) for a in self.activities)})"


class Transfer(Predicate):
	"""Defer to one of two predicates depending on the direction of a COPY request."""
	
	__slots__ = ('pull', 'push')
	
	def __init__(self, pull, push):
		self.pull = pull
		self.push = push
	
	def __call__(self, context):
		mode = context.mode
		
		if mode is None:  # Neither or both of Source and Destination; rejected by the handler itself.
			return None
		
		predicate = self.pull if mode is TransferMode.PULL else self.push
		
		return predicate(context)
	
	def __repr__(self):
		return f"Transfer(pull={self.pull!r}, push={self.push!r})"


stat = Grants(*Activity)  # Any valid token whose scope contains the path may inspect it.
