from aws_lambda_powertools import Logger

from src.functions import error_response, extract_payload
from src.models.experiment import load_config
from src.models.experiment.memorization_experiment import (
    MEMORIZATION_ARMS,
    run_memorization_experiment,
)
from src.shared.utils import response

logger = Logger(service='memorize-exp-handler')


def memorize_exp(event, context=None):
    """Run the duplicated-sample memorization experiment across the defense arms."""
    logger.info(f'Processing memorize-exp event: {event}')
    try:
        payload = extract_payload(event)
        if not payload.get('config'):
            raise ValueError('Missing required field: config')
        config = load_config(payload['config'], payload.get('overrides') or ())
        summary = run_memorization_experiment(
            config,
            arms=payload.get('arms') or MEMORIZATION_ARMS,
            output_dir=payload.get('output_dir'),
        )
        return response(summary)
    except Exception as e:
        logger.exception(f'Error running memorization experiment: {str(e)}')
        return error_response(e)
