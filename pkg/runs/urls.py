from django.urls import path

from .views import ConfigValidateView, PresetDetailView, PresetListView

urlpatterns = [
    # Presets
    path("presets/", PresetListView.as_view(), name="preset-list"),
    path("presets/<str:name>/", PresetDetailView.as_view(), name="preset-detail"),

    # Config validation
    path("config/validate/", ConfigValidateView.as_view(), name="config-validate"),
]
