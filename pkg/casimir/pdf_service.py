from datetime import datetime
from io import BytesIO
from typing import List

from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from io_formats import format_flags
from schemas import CheckStatus, RunReport

STATUS_COLORS = {
    CheckStatus.PASSED: colors.HexColor('#15803d'),
    CheckStatus.FAILED: colors.HexColor('#b91c1c'),
    CheckStatus.SKIPPED: colors.HexColor('#6b7280'),
}


def _fmt(value, spec: str = '.4g') -> str:
    return 'N/A' if value is None else format(value, spec)


class PDFService:
    def __init__(self):
        self.styles = getSampleStyleSheet()
        self.setup_custom_styles()

    def setup_custom_styles(self):
        """Setup custom paragraph styles for the PDF"""
        self.styles.add(ParagraphStyle(
            name='CustomTitle',
            parent=self.styles['Heading1'],
            fontSize=20,
            spaceAfter=24,
            textColor=colors.HexColor('#1e3a8a'),
            alignment=TA_CENTER
        ))

        self.styles.add(ParagraphStyle(
            name='SectionHeader',
            parent=self.styles['Heading2'],
            fontSize=14,
            spaceBefore=16,
            spaceAfter=10,
            textColor=colors.HexColor('#1f2937')
        ))

        self.styles.add(ParagraphStyle(
            name='CellText',
            parent=self.styles['Normal'],
            fontSize=8,
            leading=10
        ))

    def _grid_style(self) -> TableStyle:
        return TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#f3f4f6')),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
            ('VALIGN', (0, 0), (-1, -1), 'TOP'),
            ('GRID', (0, 0), (-1, -1), 0.5, colors.black),
            ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.HexColor('#f9fafb')])
        ])

    def _summary_rows(self, report: RunReport) -> List[List[str]]:
        config = report.config
        rows = [
            ['Command:', report.command],
            ['Tool version:', report.tool_version],
            ['Plasma wavelength:', f"{_fmt(config.get('plasma_wavelength'))} m"],
            ['Sphere radius:', f"{_fmt(config.get('sphere_radius'))} m"],
            ['Corrugation period:', f"{_fmt(config.get('period'))} m"],
            ['Amplitudes A1 / A2:',
             f"{_fmt(config.get('amplitude_plate'))} m / {_fmt(config.get('amplitude_sphere'))} m"],
            ['Seed:', str(config.get('seed', 'N/A'))],
        ]
        if report.power_law:
            rows.append(['Power-law slope:',
                         f"{report.power_law.slope:.4f} ± {report.power_law.slope_stderr:.4f}"])
        if report.confidence:
            ci = report.confidence
            rows.append(['Mean amplitude:',
                         f"{ci.mean_amplitude:.4g} ± {ci.delta_total:.2g} N "
                         f"({ci.confidence_level:.0%}, {ci.relative_precision:.1%})"])
        if report.calibration:
            cal = report.calibration
            rows.append(['Calibration:',
                         f"k = {cal.spring_constant:.6g} N/m, V0 = {cal.residual_potential:.6g} V"])
        if report.isolation:
            iso = report.isolation
            rows.append(['Stiffness ratio:',
                         f"k_tor/k_ben = {iso.ratio:.3g} ({'isolated' if iso.isolated else 'not isolated'})"])
        rows.append(['Generated on:', datetime.now().strftime('%Y-%m-%d %H:%M')])
        return rows

    def generate_report_pdf(self, report: RunReport) -> BytesIO:
        """Generate a PDF from a run report"""
        buffer = BytesIO()
        doc = SimpleDocTemplate(buffer, pagesize=A4, rightMargin=54, leftMargin=54,
                                topMargin=54, bottomMargin=36)
        story = []

        story.append(Paragraph("Lateral Casimir Force Report", self.styles['CustomTitle']))
        story.append(Spacer(1, 12))

        story.append(Paragraph("Summary", self.styles['SectionHeader']))
        summary_table = Table(self._summary_rows(report), colWidths=[1.8 * inch, 4.6 * inch])
        summary_table.setStyle(TableStyle([
            ('FONTNAME', (0, 0), (-1, -1), 'Helvetica'),
            ('FONTSIZE', (0, 0), (-1, -1), 9),
            ('FONTNAME', (0, 0), (0, -1), 'Helvetica-Bold'),
            ('VALIGN', (0, 0), (-1, -1), 'TOP'),
            ('LEFTPADDING', (0, 0), (-1, -1), 0),
        ]))
        story.append(summary_table)

        if report.checks:
            passed = sum(1 for c in report.checks if c.status == CheckStatus.PASSED)
            failed = sum(1 for c in report.checks if c.status == CheckStatus.FAILED)
            story.append(Paragraph(f"Checks ({passed} passed, {failed} failed)", self.styles['SectionHeader']))
            rows = [['Check', 'Status', 'Error', 'Tolerance', 'Detail']]
            for check in report.checks:
                rows.append([
                    check.name,
                    check.status.value,
                    _fmt(check.measured_error, '.3g'),
                    _fmt(check.tolerance, '.3g'),
                    Paragraph(check.detail, self.styles['CellText']),
                ])
            table = Table(rows, colWidths=[1.9 * inch, 0.5 * inch, 0.8 * inch, 0.8 * inch, 2.4 * inch],
                          repeatRows=1)
            style = self._grid_style()
            for row, check in enumerate(report.checks, start=1):
                style.add('TEXTCOLOR', (1, row), (1, row), STATUS_COLORS[check.status])
            table.setStyle(style)
            story.append(table)

        if report.separations:
            story.append(Paragraph("Separations", self.styles['SectionHeader']))
            rows = [['z (nm)', 'Amplitude (N)', 'φ at max', 'Inverted z (nm)', 'Flags']]
            for record in report.separations:
                inverted = None if record.inverted_separation is None else record.inverted_separation * 1e9
                rows.append([
                    f"{record.separation * 1e9:.2f}",
                    f"{record.amplitude:.4g}",
                    _fmt(record.phase_at_max, '.4f'),
                    _fmt(inverted, '.2f'),
                    format_flags(record.validity_flags) or '-',
                ])
            table = Table(rows, colWidths=[0.9 * inch, 1.2 * inch, 0.9 * inch, 1.2 * inch, 2.2 * inch])
            table.setStyle(self._grid_style())
            story.append(table)

        doc.build(story)
        buffer.seek(0)
        return buffer


pdf_service = PDFService()
