from functools import wraps
import time
import traceback as tb
import logging
import os
import json

LOG_LEVEL = os.getenv("LOG_LEVEL", "ERROR")
logging.basicConfig(
	level=getattr(logging, LOG_LEVEL),
	format="%(asctime)s %(name)-20s %(levelname)-8s %(message)s",
	encoding='utf-8',
	handlers=[logging.StreamHandler()]
)

# Wall-clock seconds per pipeline stage of the current run
STAGE_TIMINGS = {}


class ConfigurationError(ValueError):
	""" Invalid parameter, unknown key or inconsistent grid. """
	exit_code = 2


class DegenerateBoundaryError(RuntimeError):
	""" Too many nodes of a Picard update needed the A-clamp. """
	exit_code = 3

	def __init__(self, message:str, nodes:list=None):
		super().__init__(message)
		self.nodes = nodes or []


class OracleRangeError(RuntimeError):
	""" Backward-induction boundary left the oracle x-range. """
	exit_code = 4


class StageError(RuntimeError):
	""" Failure inside a named pipeline stage. """
	exit_code = 5

	def __init__(self, stage:str, cause:Exception):
		super().__init__(f"Stage '{stage}' failed: {type(cause).__name__}: {cause}")
		self.stage = stage
		self.exit_code = getattr(cause, "exit_code", StageError.exit_code)


def jsonable(obj):
	try:
		return json.dumps(obj)
	except:
		return ". ".join(str(obj).split("\n"))

def error_record(e:Exception, **context) -> dict:
	""" Standardized description of an exception for the error log. """
	message = str(e) or getattr(e, "message", "Run failed")
	return {
		"type": type(e).__name__,
		"error": message,
		"exit_code": getattr(e, "exit_code", 1),
		"tb": tb.format_exc() if not ("NoneType" in tb.format_exc()) else "",
		**context
	}

def reset_timings():
	STAGE_TIMINGS.clear()

def stage(name:str):
	""" Time a pipeline stage and re-raise failures as StageError carrying the stage name. """
	def decorator(f):
		@wraps(f)
		def decorated(*args, **kwargs):
			start_time = time.time()
			logging.info(f"Stage '{name}' started")
			try:
				response = f(*args, **kwargs)
			except StageError:
				raise
			except Exception as e:
				logging.error(jsonable(error_record(e, stage=name, duration=time.time() - start_time)))
				raise StageError(name, e) from e
			finally:
				STAGE_TIMINGS[name] = STAGE_TIMINGS.get(name, 0.0) + time.time() - start_time
			logging.info(f"Stage '{name}' finished in {STAGE_TIMINGS[name]:.2f}s")
			return response
		return decorated
	return decorator

def handle_errors(f):
	""" Turn any exception of a command-line entry point into a non-zero exit status. """
	@wraps(f)
	def decorated(*args, **kwargs):
		start_time = time.time()
		try:
			return f(*args, **kwargs)
		except Exception as e:
			record = error_record(e, duration=time.time() - start_time, stage=getattr(e, "stage", None))
			logging.error(jsonable(record))
			print(f"Error: {record['error']}")
			exit_code = getattr(e, "exit_code", 1)
			return exit_code if isinstance(exit_code, int) and exit_code else 1
	return decorated
