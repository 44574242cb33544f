"""reviewkit: a self-hosted code review support service.

Provides guided review traversal, structured comment linting with advice
and snippet search, expertise-based reviewer assignment, fatigue-aware
scheduling with halt reminders, and questionnaire analytics, behind an
HTTP API and a command line interface.
"""

__version__ = "0.1.0"
