"""skillpipe: diverse skill repertoires, local-model adaptation, and
representation redescription on desk-scale kinematic tasks."""

__version__ = "0.1.0"
