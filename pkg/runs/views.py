# runs/views.py

from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import APIView

from .config import merge_preset
from .presets import PRESETS, describe_presets, get_preset
from .serializers import RunConfigSerializer


# ---------------------
# Presets
# ---------------------
class PresetListView(APIView):
    """Names and one-line descriptions of the built-in configurations."""

    def get(self, request, *args, **kwargs):
        return Response(describe_presets())


class PresetDetailView(APIView):
    """The full run-config document of one preset."""

    def get(self, request, name, *args, **kwargs):
        if name not in PRESETS:
            return Response({"detail": f"Unknown preset '{name}'."}, status=status.HTTP_404_NOT_FOUND)
        return Response({"name": name, "description": PRESETS[name]["description"], "config": get_preset(name)})


# ---------------------
# Config validation
# ---------------------
class ConfigValidateView(APIView):
    """
    Validates a run-config document the way ``manage.py solitons`` does and
    echoes it back with every default filled in. Nothing is solved.
    """

    def post(self, request, *args, **kwargs):
        if not isinstance(request.data, dict):
            return Response({"detail": "Expected a JSON object."}, status=status.HTTP_400_BAD_REQUEST)
        serializer = RunConfigSerializer(data=merge_preset(request.data))
        serializer.is_valid(raise_exception=True)
        return Response({"detail": "Configuration is valid.", "config": serializer.data})
