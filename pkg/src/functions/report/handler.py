from pathlib import Path
from typing import Any, Dict

from aws_lambda_powertools import Logger

from src.functions import error_response, extract_payload
from src.models.experiment.report import build_report
from src.shared.settings import settings
from src.shared.utils import response

logger = Logger(service='report-handler')


def report(event, context=None):
    """
    Build the comparison table of one or more run manifests.

    Payload:
        manifests: Manifest files or run directories
        output_dir: Where report.csv/report_summary.csv/report.md go
            (defaults to the artifact root)
    """
    logger.info(f'Processing report event: {event}')
    try:
        payload = extract_payload(event)
        manifests = payload.get('manifests') or []
        if not manifests:
            raise ValueError('Missing required field: manifests')
        output_dir = Path(payload.get('output_dir') or settings.output_dir)
        result = build_report(manifests, output_dir)
        body: Dict[str, Any] = {
            'paths': {key: str(path) for key, path in result['paths'].items()},
            'rows': result['rows'].to_dict(orient='records'),
            'summary': result['summary'].to_dict(orient='records'),
        }
        return response(body)
    except Exception as e:
        logger.exception(f'Error building report: {str(e)}')
        return error_response(e)
