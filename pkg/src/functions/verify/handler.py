from aws_lambda_powertools import Logger

from src.functions import error_response, extract_payload
from src.models.experiment import verify_manifest
from src.shared.utils import response

logger = Logger(service='verify-handler')


def verify(event, context=None):
    """Re-hash every artifact listed in a run manifest."""
    logger.info(f'Processing verify event: {event}')
    try:
        payload = extract_payload(event)
        if not payload.get('manifest'):
            raise ValueError('Missing required field: manifest')
        manifest = verify_manifest(payload['manifest'])
        return response(
            {
                'manifest': str(payload['manifest']),
                'status': manifest.status,
                'verified_artifacts': len(manifest.artifacts),
            }
        )
    except Exception as e:
        logger.exception(f'Error verifying manifest: {str(e)}')
        return error_response(e)
