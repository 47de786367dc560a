"""netveil: anonymize router configurations by growing the topology with
style-matched fake devices while keeping every original forwarding path."""

__version__ = "0.1.0"
