"""
Risk-adjusted funnel plot.
Run with: survchart funnel --data data.csv --model glm.json --followup 30 --ctime 365 --out funnel.csv
"""
from django.conf import settings

from monitoring.exports import export_funnel_csv, export_funnel_plot_csv
from monitoring.funnel import funnel_plot_data, funnel_summary
from monitoring.reports import funnel_report_pdf, funnel_svg, write_svg
from monitoring.serializers import funnel_summary_to_dict

from ._base import SurvchartCommand, float_list


class Command(SurvchartCommand):
    help = 'Classifies units as worse, in-control or better against funnel plot bounds'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--model', help='Logistic or manual model JSON (omit for no risk adjustment)')
        parser.add_argument('--followup', type=float, help='Followup window C (default: model followup or 30)')
        parser.add_argument('--ctime', type=float, help='Only patients whose window closed by this time')
        parser.add_argument('--p0', type=float, help='Baseline failure probability (default: pooled)')
        parser.add_argument('--conflev', type=float_list,
                            default=list(settings.SURVCHART_DEFAULTS['conflevs']),
                            help='Confidence levels, comma-separated (default: 0.95,0.99)')
        parser.add_argument('--out', help='Summary CSV output path')
        parser.add_argument('--plot-data', help='Plot-data CSV output path')
        parser.add_argument('--svg', help='Funnel plot SVG output path')
        parser.add_argument('--report', help='PDF report output path')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.load_data(options['data'], options)
        model = self.load_model(options['model']) if options['model'] else None
        followup = options['followup']
        if followup is None:
            followup = getattr(model, 'followup', None) or 30.0

        summary = funnel_summary(
            data, model=model, followup=followup, ctime=options['ctime'],
            p0=options['p0'], conflevs=options['conflev'],
        )
        plot_data = funnel_plot_data(summary)

        if options['out']:
            export_funnel_csv(summary, options['out'])
        if options['plot_data']:
            export_funnel_plot_csv(plot_data, options['plot_data'])
        if options['svg']:
            write_svg(funnel_svg(plot_data), options['svg'])
        if options['report']:
            funnel_report_pdf(summary, plot_data, options['report'])
            self.stderr.write(self.style.SUCCESS(f"Report written to {options['report']}"))

        if options['json']:
            self.write_json(funnel_summary_to_dict(summary))
            return
        self.stdout.write(export_funnel_csv(summary), ending='')
