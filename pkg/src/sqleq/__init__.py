"""SQL query-pair equivalence toolkit.

Parses a SELECT-only SQL dialect, serializes schemas and builds the prompt
texts used to ask an LLM whether two queries are equivalent, renders
unoptimized logical plans for prompt injection, runs an execution-based
oracle on concrete database instances, and scores benchmark runs with
EQ/NEQ accuracy and their geometric mean.
"""

__version__ = "0.1.0"
