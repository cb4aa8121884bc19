"""
Shared plumbing for the stage handlers.

Every handler receives an event dict, the same shape `manage.py` builds from
its flags:

    {
        "config": "<path or shipped config name>" | {...inline config...},
        "overrides": ["train.iterations=500", ...],
        "run_dir": "<optional run directory override>"
    }
"""

import json
from http import HTTPStatus
from typing import Any, Callable, Dict

from aws_lambda_powertools import Logger

from src.models.experiment import ExperimentPipeline, load_config
from src.shared.utils import response

logger = Logger(service='stage-handler')


def extract_payload(event: Dict[str, Any]) -> Dict[str, Any]:
    """
    Extract the payload from a direct invocation or an API-Gateway-style event.

    Args:
        event (Dict[str, Any]): Handler event

    Returns:
        Dict[str, Any]: Payload with 'config', 'overrides' and 'run_dir'
    """
    if 'body' in event:
        body = event['body']
        return json.loads(body) if isinstance(body, str) else dict(body or {})
    return dict(event or {})


def build_pipeline(payload: Dict[str, Any]) -> ExperimentPipeline:
    """
    Raises:
        ValueError: If the payload has no config or the config is invalid
    """
    if not payload.get('config'):
        raise ValueError('Missing required field: config')
    config = load_config(payload['config'], payload.get('overrides') or ())
    return ExperimentPipeline(config, payload.get('run_dir'))


def error_response(error: Exception) -> Dict[str, Any]:
    """Map an exception to the response envelope: ValueError is a client error."""
    if isinstance(error, ValueError):
        return response({'error': str(error)}, HTTPStatus.BAD_REQUEST)
    return response(
        {'error': 'Internal Server Error', 'details': f'{type(error).__name__}: {error}'},
        HTTPStatus.INTERNAL_SERVER_ERROR,
    )


def run_stage(
    event: Dict[str, Any],
    stage: str,
    summarize: Callable[[ExperimentPipeline, Any], Dict[str, Any]],
) -> Dict[str, Any]:
    """
    Run one pipeline stage and wrap the outcome in the response envelope.

    Args:
        event: Handler event
        stage: Name of the ExperimentPipeline method to call
        summarize: Builds the response body from the pipeline and the stage result
    """
    logger.info(f'Processing {stage} event: {event}')
    try:
        pipeline = build_pipeline(extract_payload(event))
        result = getattr(pipeline, stage)()
        body = {'stage': stage, 'run_dir': str(pipeline.run_dir), **summarize(pipeline, result)}
        logger.info(f'Stage {stage} finished for {pipeline.config.name}')
        return response(body)
    except Exception as e:
        logger.exception(f'Error running {stage}: {str(e)}')
        return error_response(e)
