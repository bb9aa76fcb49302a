from contextlib import contextmanager
from typing import TYPE_CHECKING, Any, Dict, Iterator, Optional

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

if TYPE_CHECKING:
    from src.config import Config

SERVICE_NAME = "portfolio-anneal-bench"

_provider: Optional[TracerProvider] = None


def setup_telemetry(config: "Config") -> trace.Tracer:
    """
    Set up OpenTelemetry tracing; spans are exported only when an OTLP endpoint is configured
    """
    global _provider
    if _provider is not None:
        return trace.get_tracer(SERVICE_NAME)

    resource = Resource.create({
        "service.name": SERVICE_NAME,
        "service.version": "0.1.0",
    })

    provider = TracerProvider(resource=resource)
    if config.otlp_endpoint:
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter

        provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=config.otlp_endpoint)))
    trace.set_tracer_provider(provider)
    _provider = provider

    return trace.get_tracer(SERVICE_NAME)


@contextmanager
def traced(name: str, attributes: Optional[Dict[str, Any]] = None) -> Iterator[trace.Span]:
    """Span around a pipeline stage; a no-op span when telemetry was never set up"""
    tracer = trace.get_tracer(SERVICE_NAME)
    with tracer.start_as_current_span(name) as span:
        for key, value in (attributes or {}).items():
            if value is not None:
                span.set_attribute(key, value)
        yield span
